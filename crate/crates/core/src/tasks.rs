//! Circuit templates, input-target training sets and the Deutsch instance.
//!
//! A template is a list of slots in application order: the first slot acts
//! first on the initial state, so `[U1, oracle, U3]` realizes the operator
//! product `U3 * O(x) * U1` ("rightmost-acts-first" when written as a product).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::{CodecConfig, Genome};
use crate::linalg::{
    fidelity, su2_closed_form, Complex, ComplexMatrix, GeneratorBasis, ParameterVector, StateVector,
};

/// Operator-product convention written into result metadata.
pub const SLOT_CONVENTION: &str = "rightmost-acts-first";

const UNITARY_TOL: f64 = 1e-12;
const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slot {
    /// Trainable unitary, indexing the genome's parameter vectors (0-based).
    Trainable(usize),
    /// Input-keyed fixed unitary from the named oracle family.
    Oracle(String),
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Trainable(j) => write!(f, "trainable:{j}"),
            Slot::Oracle(name) => write!(f, "oracle:{name}"),
        }
    }
}

impl FromStr for Slot {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some(("trainable", j)) => j
                .trim()
                .parse()
                .map(Slot::Trainable)
                .map_err(|_| Error::InvalidTask(format!("bad trainable slot `{s}`"))),
            Some(("oracle", name)) if !name.trim().is_empty() => {
                Ok(Slot::Oracle(name.trim().to_string()))
            }
            _ => Err(Error::InvalidTask(format!(
                "slot `{s}` must be `trainable:<index>` or `oracle:<name>`"
            ))),
        }
    }
}

/// Maps a classical input label to a fixed unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleFamily {
    name: String,
    entries: BTreeMap<String, ComplexMatrix>,
}

impl OracleFamily {
    pub fn new(
        name: impl Into<String>,
        entries: impl IntoIterator<Item = (String, ComplexMatrix)>,
    ) -> Result<Self> {
        let name = name.into();
        let entries: BTreeMap<_, _> = entries.into_iter().collect();
        for (label, m) in &entries {
            let defect = m.unitarity_defect();
            if defect > UNITARY_TOL {
                return Err(Error::InvalidTask(format!(
                    "oracle `{name}` entry `{label}` is not unitary (defect {defect:e})"
                )));
            }
        }
        Ok(Self { name, entries })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn resolve(&self, label: &str) -> Result<&ComplexMatrix> {
        self.entries
            .get(label)
            .ok_or_else(|| Error::UnknownLabel(format!("{label} (oracle `{}`)", self.name)))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &ComplexMatrix)> {
        self.entries.iter()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitTemplate {
    dim: usize,
    slots: Vec<Slot>,
    trainable: usize,
}

impl CircuitTemplate {
    pub fn new(dim: usize, slots: Vec<Slot>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        let mut seen: Vec<usize> = slots
            .iter()
            .filter_map(|s| match s {
                Slot::Trainable(j) => Some(*j),
                Slot::Oracle(_) => None,
            })
            .collect();
        seen.sort_unstable();
        seen.dedup();
        if seen.is_empty() {
            return Err(Error::InvalidTask("template has no trainable slot".into()));
        }
        if seen.iter().enumerate().any(|(i, &j)| i != j) {
            return Err(Error::InvalidTask(format!(
                "trainable slot indices must be 0..N_u without gaps, got {seen:?}"
            )));
        }
        Ok(Self {
            dim,
            slots,
            trainable: seen.len(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// `N_u`
    pub fn trainable_slots(&self) -> usize {
        self.trainable
    }
}

/// Builds trainable unitaries from parameter vectors, using the closed SU(2)
/// form when `d = 2`.
#[derive(Debug, Clone)]
pub struct UnitaryBuilder {
    basis: Option<GeneratorBasis>,
}

impl UnitaryBuilder {
    pub fn new(dim: usize) -> Result<Self> {
        let basis = if dim == 2 {
            None
        } else {
            Some(GeneratorBasis::new(dim)?)
        };
        Ok(Self { basis })
    }

    pub fn unitary(&self, params: &ParameterVector) -> Result<ComplexMatrix> {
        match &self.basis {
            None => su2_closed_form(params),
            Some(basis) => basis.unitary(params),
        }
    }
}

/// A template together with its training set `T`.
#[derive(Debug, Clone)]
pub struct TaskSpec {
    name: String,
    template: CircuitTemplate,
    oracles: Vec<OracleFamily>,
    initial_state: StateVector,
    pairs: Vec<(String, StateVector)>,
    builder: UnitaryBuilder,
}

impl TaskSpec {
    pub fn new(
        name: impl Into<String>,
        template: CircuitTemplate,
        oracles: Vec<OracleFamily>,
        initial_state: StateVector,
        pairs: Vec<(String, StateVector)>,
    ) -> Result<Self> {
        let d = template.dim();
        check_state("initial state", &initial_state, d)?;
        if pairs.is_empty() {
            return Err(Error::InvalidTask("training set is empty".into()));
        }
        for (label, target) in &pairs {
            check_state(&format!("target `{label}`"), target, d)?;
        }
        for (_, m) in oracles.iter().flat_map(|o| o.entries()) {
            if m.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: m.dim(),
                });
            }
        }
        for slot in template.slots() {
            if let Slot::Oracle(name) = slot {
                let family = oracles
                    .iter()
                    .find(|o| o.name() == name)
                    .ok_or_else(|| Error::InvalidTask(format!("unknown oracle family `{name}`")))?;
                for (label, _) in &pairs {
                    family.resolve(label)?;
                }
            }
        }
        Ok(Self {
            name: name.into(),
            builder: UnitaryBuilder::new(d)?,
            template,
            oracles,
            initial_state,
            pairs,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn template(&self) -> &CircuitTemplate {
        &self.template
    }

    pub fn dim(&self) -> usize {
        self.template.dim()
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.initial_state
    }

    pub fn pairs(&self) -> &[(String, StateVector)] {
        &self.pairs
    }

    pub fn oracles(&self) -> &[OracleFamily] {
        &self.oracles
    }

    fn oracle(&self, name: &str) -> Result<&OracleFamily> {
        self.oracles
            .iter()
            .find(|o| o.name() == name)
            .ok_or_else(|| Error::InvalidTask(format!("unknown oracle family `{name}`")))
    }

    /// Decoded unitary of every trainable slot, indexed by slot number.
    pub fn trainable_unitaries(
        &self,
        genome: &Genome,
        codec: &CodecConfig,
    ) -> Result<Vec<ComplexMatrix>> {
        if codec.dim != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: codec.dim,
            });
        }
        genome.check_shape(codec, self.template.trainable_slots())?;
        genome
            .decode(codec)
            .iter()
            .map(|p| self.builder.unitary(p))
            .collect()
    }

    fn slot_matrix<'a>(
        &'a self,
        slot: &Slot,
        unitaries: &'a [ComplexMatrix],
        label: &str,
    ) -> Result<&'a ComplexMatrix> {
        match slot {
            Slot::Trainable(j) => Ok(&unitaries[*j]),
            Slot::Oracle(name) => self.oracle(name)?.resolve(label),
        }
    }

    /// Total operator `U_tot(x)` as a product of slot matrices.
    pub fn compose_total(
        &self,
        genome: &Genome,
        codec: &CodecConfig,
        label: &str,
    ) -> Result<ComplexMatrix> {
        let unitaries = self.trainable_unitaries(genome, codec)?;
        self.compose_with(&unitaries, label)
    }

    pub fn compose_with(&self, unitaries: &[ComplexMatrix], label: &str) -> Result<ComplexMatrix> {
        let mut total = ComplexMatrix::identity(self.dim())?;
        for slot in self.template.slots() {
            total = self.slot_matrix(slot, unitaries, label)?.matmul(&total)?;
        }
        Ok(total)
    }

    /// `U_tot(x) |psi_in>` applied slot by slot.
    pub fn output_with(&self, unitaries: &[ComplexMatrix], label: &str) -> Result<StateVector> {
        let mut state = self.initial_state.clone();
        for slot in self.template.slots() {
            state = self.slot_matrix(slot, unitaries, label)?.apply(&state)?;
        }
        Ok(state)
    }

    /// Fidelity of each training pair, in training-set order.
    pub fn pair_fidelities(&self, genome: &Genome, codec: &CodecConfig) -> Result<Vec<f64>> {
        let unitaries = self.trainable_unitaries(genome, codec)?;
        self.pairs
            .iter()
            .map(|(label, target)| fidelity(target, &self.output_with(&unitaries, label)?))
            .collect()
    }

    /// Mean fidelity over the training set.
    pub fn fitness(&self, genome: &Genome, codec: &CodecConfig) -> Result<f64> {
        let f = self.pair_fidelities(genome, codec)?;
        Ok(f.iter().sum::<f64>() / f.len() as f64)
    }

    pub fn to_file(&self) -> TaskFile {
        TaskFile {
            name: Some(self.name.clone()),
            dimension: self.dim(),
            slots: self
                .template
                .slots()
                .iter()
                .map(ToString::to_string)
                .collect(),
            initial_state: encode_state(&self.initial_state),
            oracles: self
                .oracles
                .iter()
                .map(|o| OracleFile {
                    name: o.name().to_string(),
                    entries: o
                        .entries()
                        .map(|(label, m)| OracleEntryFile {
                            label: label.clone(),
                            matrix: (0..m.dim())
                                .map(|i| {
                                    (0..m.dim()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()
                                })
                                .collect(),
                        })
                        .collect(),
                })
                .collect(),
            pairs: self
                .pairs
                .iter()
                .map(|(label, s)| PairFile {
                    label: label.clone(),
                    target: encode_state(s),
                })
                .collect(),
        }
    }
}

fn check_state(what: &str, s: &StateVector, dim: usize) -> Result<()> {
    if s.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: s.dim(),
        });
    }
    if (s.norm() - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidTask(format!(
            "{what} is not normalized (norm {})",
            s.norm()
        )));
    }
    Ok(())
}

/// Serializable task description; complex numbers are `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dimension: usize,
    /// Application order: the first slot acts first on the state.
    pub slots: Vec<String>,
    pub initial_state: Vec<[f64; 2]>,
    #[serde(default)]
    pub oracles: Vec<OracleFile>,
    pub pairs: Vec<PairFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleFile {
    pub name: String,
    pub entries: Vec<OracleEntryFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEntryFile {
    pub label: String,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFile {
    pub label: String,
    pub target: Vec<[f64; 2]>,
}

impl TaskFile {
    pub fn into_spec(self) -> Result<TaskSpec> {
        let slots = self
            .slots
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Slot>>>()?;
        let template = CircuitTemplate::new(self.dimension, slots)?;
        let oracles = self
            .oracles
            .into_iter()
            .map(|o| {
                let entries = o
                    .entries
                    .into_iter()
                    .map(|e| {
                        let rows = e
                            .matrix
                            .into_iter()
                            .map(|row| {
                                row.into_iter()
                                    .map(|[re, im]| Complex::new(re, im))
                                    .collect()
                            })
                            .collect();
                        Ok((e.label, ComplexMatrix::from_rows(rows)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                OracleFamily::new(o.name, entries)
            })
            .collect::<Result<Vec<_>>>()?;
        let pairs = self
            .pairs
            .into_iter()
            .map(|p| Ok((p.label, decode_state(&p.target)?)))
            .collect::<Result<Vec<_>>>()?;
        TaskSpec::new(
            self.name.unwrap_or_else(|| "custom".into()),
            template,
            oracles,
            decode_state(&self.initial_state)?,
            pairs,
        )
    }
}

fn encode_state(s: &StateVector) -> Vec<[f64; 2]> {
    s.amplitudes().iter().map(|z| [z.re, z.im]).collect()
}

fn decode_state(v: &[[f64; 2]]) -> Result<StateVector> {
    StateVector::new(v.iter().map(|&[re, im]| Complex::new(re, im)).collect())
}

/// The four one-bit Boolean functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BooleanFunction {
    Const0,
    Const1,
    Identity,
    Negation,
}

impl BooleanFunction {
    pub const ALL: [BooleanFunction; 4] = [
        BooleanFunction::Const0,
        BooleanFunction::Const1,
        BooleanFunction::Identity,
        BooleanFunction::Negation,
    ];

    pub fn eval(self, k: u8) -> u8 {
        match self {
            BooleanFunction::Const0 => 0,
            BooleanFunction::Const1 => 1,
            BooleanFunction::Identity => k,
            BooleanFunction::Negation => 1 - k,
        }
    }

    pub fn is_constant(self) -> bool {
        self.eval(0) == self.eval(1)
    }

    pub fn label(self) -> &'static str {
        match self {
            BooleanFunction::Const0 => "const0",
            BooleanFunction::Const1 => "const1",
            BooleanFunction::Identity => "identity",
            BooleanFunction::Negation => "negation",
        }
    }
}

/// Phase oracle `|k> -> exp(i pi x(k)) |k>`.
pub fn deutsch_oracle(f: BooleanFunction) -> ComplexMatrix {
    let phase = |k: u8| if f.eval(k) == 0 { 1.0 } else { -1.0 };
    ComplexMatrix::diagonal(&[Complex::new(phase(0), 0.0), Complex::new(phase(1), 0.0)])
        .expect("2x2")
}

pub const DEUTSCH_ORACLE: &str = "x";

fn deutsch_with(name: &str, pairs: &[(BooleanFunction, usize)]) -> TaskSpec {
    let template = CircuitTemplate::new(
        2,
        vec![
            Slot::Trainable(0),
            Slot::Oracle(DEUTSCH_ORACLE.into()),
            Slot::Trainable(1),
        ],
    )
    .expect("static template");
    let oracle = OracleFamily::new(
        DEUTSCH_ORACLE,
        BooleanFunction::ALL
            .iter()
            .map(|&f| (f.label().to_string(), deutsch_oracle(f))),
    )
    .expect("phase oracles are unitary");
    let pairs = pairs
        .iter()
        .map(|&(f, k)| (f.label().to_string(), StateVector::basis(2, k).unwrap()))
        .collect();
    TaskSpec::new(
        name,
        template,
        vec![oracle],
        StateVector::basis(2, 0).unwrap(),
        pairs,
    )
    .expect("static task")
}

/// `U3 O(x) U1` on a qubit from `|0>`; constant -> `|0>`, balanced -> `|1>`.
///
/// The constant class is represented by `const0` and the balanced class by
/// `identity`; the other two functions differ from these by a global phase.
pub fn deutsch_task() -> TaskSpec {
    deutsch_with(
        "deutsch",
        &[(BooleanFunction::Const0, 0), (BooleanFunction::Identity, 1)],
    )
}

/// Deutsch task with all four Boolean functions in the training set.
pub fn deutsch_task_all_functions() -> TaskSpec {
    deutsch_with(
        "deutsch-all",
        &[
            (BooleanFunction::Const0, 0),
            (BooleanFunction::Const1, 0),
            (BooleanFunction::Identity, 1),
            (BooleanFunction::Negation, 1),
        ],
    )
}

/// Built-in task by name.
pub fn builtin_task(name: &str) -> Option<TaskSpec> {
    match name {
        "deutsch" => Some(deutsch_task()),
        "deutsch-all" => Some(deutsch_task_all_functions()),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionOutcome {
    /// `|<0|out_c>|^2`
    pub success_constant: f64,
    /// `|<1|out_b>|^2`
    pub success_balanced: f64,
    /// `|<out_c|out_b>|^2`; zero iff one fixed measurement separates the classes.
    pub orthogonality_defect: f64,
}

pub fn decision_outcome(
    out_constant: &StateVector,
    out_balanced: &StateVector,
) -> Result<DecisionOutcome> {
    let m0 = StateVector::basis(out_constant.dim(), 0)?;
    let m1 = StateVector::basis(out_constant.dim(), 1)?;
    Ok(DecisionOutcome {
        success_constant: fidelity(&m0, out_constant)?,
        success_balanced: fidelity(&m1, out_balanced)?,
        orthogonality_defect: fidelity(out_constant, out_balanced)?,
    })
}

/// Decision outcome of a genome on the Deutsch circuit.
pub fn deutsch_decision(genome: &Genome, codec: &CodecConfig) -> Result<DecisionOutcome> {
    let task = deutsch_task();
    let u = task.trainable_unitaries(genome, codec)?;
    decision_outcome(
        &task.output_with(&u, BooleanFunction::Const0.label())?,
        &task.output_with(&u, BooleanFunction::Identity.label())?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::random_genome;
    use crate::linalg::hadamard;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn codec() -> CodecConfig {
        CodecConfig::new(15, PI, 2).unwrap()
    }

    fn hadamard_genome() -> Genome {
        let a = FRAC_PI_2 * FRAC_1_SQRT_2;
        let p = ParameterVector::new(vec![a, 0.0, a]);
        Genome::encode_nearest(&[p.clone(), p], &codec()).unwrap()
    }

    fn near_identity_genome() -> Genome {
        // grid has no exact zero; the closest point is +-R/2^L
        Genome::encode_nearest(
            &[ParameterVector::zeros(2), ParameterVector::zeros(2)],
            &codec(),
        )
        .unwrap()
    }

    #[test]
    fn oracles_match_phase_definition() {
        let id = ComplexMatrix::identity(2).unwrap();
        assert_eq!(deutsch_oracle(BooleanFunction::Const0), id);
        assert_eq!(
            deutsch_oracle(BooleanFunction::Const1),
            id.scale(Complex::new(-1.0, 0.0))
        );
        assert_eq!(
            deutsch_oracle(BooleanFunction::Identity),
            crate::linalg::pauli()[2]
        );
        assert_eq!(
            deutsch_oracle(BooleanFunction::Negation),
            crate::linalg::pauli()[2].scale(Complex::new(-1.0, 0.0))
        );
    }

    #[test]
    fn hadamard_solution_scores_one() {
        let f = deutsch_task()
            .fitness(&hadamard_genome(), &codec())
            .unwrap();
        assert!(f > 1.0 - 1e-6, "{f}");

        // exact Hadamard through compose_with
        let task = deutsch_task();
        let u = vec![hadamard(), hadamard()];
        let out_c = task.output_with(&u, "const0").unwrap();
        let out_b = task.output_with(&u, "identity").unwrap();
        let d = decision_outcome(&out_c, &out_b).unwrap();
        assert!((d.success_constant - 1.0).abs() < 1e-12);
        assert!((d.success_balanced - 1.0).abs() < 1e-12);
        assert!(d.orthogonality_defect < 1e-12);
    }

    #[test]
    fn identity_solution_scores_half() {
        let task = deutsch_task();
        let id = ComplexMatrix::identity(2).unwrap();
        let u = vec![id.clone(), id];
        let fc = fidelity(&task.pairs()[0].1, &task.output_with(&u, "const0").unwrap()).unwrap();
        let fb = fidelity(
            &task.pairs()[1].1,
            &task.output_with(&u, "identity").unwrap(),
        )
        .unwrap();
        assert_eq!((fc, fb), (1.0, 0.0));
        let f = task.fitness(&near_identity_genome(), &codec()).unwrap();
        assert!((f - 0.5).abs() < 1e-6, "{f}");
    }

    #[test]
    fn representative_choice_does_not_change_fitness() {
        let base = deutsch_task();
        let all = deutsch_task_all_functions();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let g = random_genome(&mut rng, &codec(), 2);
            let f = base.fitness(&g, &codec()).unwrap();
            let per = all.pair_fidelities(&g, &codec()).unwrap();
            assert!((per[0] - per[1]).abs() < 1e-14);
            assert!((per[2] - per[3]).abs() < 1e-14);
            assert!((all.fitness(&g, &codec()).unwrap() - f).abs() < 1e-14);
            assert!((0.0..=1.0 + 1e-15).contains(&f));
        }
    }

    #[test]
    fn fitness_is_mean_of_class_fidelities() {
        let task = deutsch_task();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let g = random_genome(&mut rng, &codec(), 2);
            // independent recomputation through explicit operator products
            let fc = fidelity(
                &StateVector::basis(2, 0).unwrap(),
                &task
                    .compose_total(&g, &codec(), "const0")
                    .unwrap()
                    .apply(task.initial_state())
                    .unwrap(),
            )
            .unwrap();
            let fb = fidelity(
                &StateVector::basis(2, 1).unwrap(),
                &task
                    .compose_total(&g, &codec(), "identity")
                    .unwrap()
                    .apply(task.initial_state())
                    .unwrap(),
            )
            .unwrap();
            assert!((task.fitness(&g, &codec()).unwrap() - (fc + fb) / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn compose_total_is_unitary_and_ordered() {
        let task = deutsch_task();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..100 {
            let g = random_genome(&mut rng, &codec(), 2);
            let total = task.compose_total(&g, &codec(), "const0").unwrap();
            assert!(total.unitarity_defect() < 1e-12);
            let u = task.trainable_unitaries(&g, &codec()).unwrap();
            assert!(total.max_abs_diff(&u[1].matmul(&u[0]).unwrap()).unwrap() < 1e-14);
            let tb = task.compose_total(&g, &codec(), "identity").unwrap();
            let want = u[1]
                .matmul(&deutsch_oracle(BooleanFunction::Identity))
                .unwrap()
                .matmul(&u[0])
                .unwrap();
            assert!(tb.max_abs_diff(&want).unwrap() < 1e-14);
        }
    }

    #[test]
    fn single_trainable_slot_at_zero_is_identity() {
        let template = CircuitTemplate::new(2, vec![Slot::Trainable(0)]).unwrap();
        let task = TaskSpec::new(
            "single",
            template,
            vec![],
            StateVector::basis(2, 0).unwrap(),
            vec![("x".into(), StateVector::basis(2, 0).unwrap())],
        )
        .unwrap();
        let u = task
            .compose_with(&[ComplexMatrix::identity(2).unwrap()], "x")
            .unwrap();
        assert_eq!(u, ComplexMatrix::identity(2).unwrap());
    }

    #[test]
    fn unknown_label_and_bad_templates() {
        let task = deutsch_task();
        let g = hadamard_genome();
        assert!(matches!(
            task.compose_total(&g, &codec(), "nope"),
            Err(Error::UnknownLabel(_))
        ));
        assert!(CircuitTemplate::new(2, vec![Slot::Oracle("x".into())]).is_err());
        assert!(CircuitTemplate::new(2, vec![Slot::Trainable(0), Slot::Trainable(2)]).is_err());
        assert!("trainable:x".parse::<Slot>().is_err());
        assert!("bogus".parse::<Slot>().is_err());
        assert_eq!(
            "oracle:f".parse::<Slot>().unwrap(),
            Slot::Oracle("f".into())
        );
    }

    #[test]
    fn task_file_round_trip() {
        let task = deutsch_task();
        let file = task.to_file();
        let back = file.clone().into_spec().unwrap();
        assert_eq!(back.to_file(), file);
        let g = hadamard_genome();
        assert_eq!(
            back.fitness(&g, &codec()).unwrap(),
            task.fitness(&g, &codec()).unwrap()
        );
    }

    #[test]
    fn task_file_validation() {
        let mut file = deutsch_task().to_file();
        file.pairs[0].target = vec![[1.0, 0.0], [1.0, 0.0]];
        assert!(file.into_spec().is_err());

        let mut file = deutsch_task().to_file();
        file.oracles[0].entries[0].matrix[0][0] = [2.0, 0.0];
        assert!(file.into_spec().is_err());

        let mut file = deutsch_task().to_file();
        file.pairs[0].label = "missing".into();
        assert!(matches!(file.into_spec(), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn decision_outcome_edge_cases() {
        let s = StateVector::basis(2, 0).unwrap();
        assert_eq!(decision_outcome(&s, &s).unwrap().orthogonality_defect, 1.0);
        let o = decision_outcome(&s, &StateVector::basis(2, 1).unwrap()).unwrap();
        assert_eq!(
            (
                o.success_constant,
                o.success_balanced,
                o.orthogonality_defect
            ),
            (1.0, 1.0, 0.0)
        );
    }
}
