use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameters c[{i}] and c[{j}] differ by a lattice point (distance {distance:.3e})")]
    GenericityViolation { i: usize, j: usize, distance: f64 },
    #[error("q-deformed algebras need an even number of parameters, got {n}")]
    ParityViolation { n: usize },
    #[error("sum of parameters {sum_re}{sum_im:+}i is not an integer")]
    SumNotInteger { sum_re: f64, sum_im: f64 },
    #[error("q must lie in (0, 1) after normalization, got {q}")]
    InvalidQ { q: f64 },
    #[error("operands belong to different algebras")]
    VariantMismatch,
    #[error("operation not supported: {0}")]
    Unsupported(String),
    #[error("c[{i}] - c'[{i}] is not an integer")]
    NonIntegerGap { i: usize },
    #[error("parameter lists have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("element is not in the bimodule: weight {weight} coefficient not divisible by R_j (relative remainder {remainder:.3e})")]
    MembershipViolation { weight: i64, remainder: f64 },
    #[error("no involution pairs c with c' (index {i} has no partner)")]
    NoPairing { i: usize },
    #[error("index {i} pairs with more than one partner within tolerance")]
    AmbiguousPairing { i: usize },
    #[error("zero is never a root of a balanced Laurent polynomial")]
    ZeroRoot,
    #[error("weight polynomial G has degree {degree}, the maximum is {max}")]
    DegreeTooHigh { degree: usize, max: usize },
    #[error("tau = 0 requires G(0) = 0")]
    ZeroConstraintViolated,
    #[error("tau must lie in [0, 1), got {tau}")]
    InvalidTau { tau: f64 },
    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),
    #[error("quasi-period factor {measured_re}{measured_im:+}i does not match the twist {expected_re}{expected_im:+}i")]
    QuasiPeriodMismatch { measured_re: f64, measured_im: f64, expected_re: f64, expected_im: f64 },
    #[error("weight pole {index} does not lie on any parameter lattice q^(2c_i) p^Z")]
    PoleOffLattice { index: usize },
    #[error("weight poles {first} and {second} lie on the same lattice (double pole)")]
    DoublePole { first: usize, second: usize },
    #[error("weight exponent {exponent2}/2 must be an integer for a single-valued weight")]
    NonSingleValued { exponent2: i64 },
    #[error("trace form is degenerate at level {level}")]
    DegenerateTrace { level: usize },
    #[error("product exceeds the truncation degree {max_degree}")]
    TruncationOverflow { max_degree: usize },
    #[error("block traces are incompatible (residual {residual:.3e})")]
    CompatibilityViolation { residual: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for failures of a numerical procedure rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::QuadratureNotConverged(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
