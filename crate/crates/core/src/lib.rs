//! Spectrum and resolvent-set criteria for nonsymmetric tridiagonal operators.
//!
//! The operator is given by its sub-, main and superdiagonal sequences. Its
//! J-fraction polynomials `Q_n`, `P_n` decide, point by point, whether
//! `lambda` is an eigenvalue, lies in the resolvent set or in the spectrum:
//!
//! * eigenvalue: `sum |Q_n h_n|^2` converges,
//! * resolvent: the closed-form resolvent entries decay geometrically away
//!   from the diagonal and `|Q_n h_n|` grows geometrically,
//! * otherwise spectrum or undecided.
//!
//! All numerical code is generic over [`Real`]; [`f64`] and the 106-bit
//! [`DoubleDouble`] are the two supported precisions.

pub mod error;
pub mod fit;
pub mod io;
pub mod jfraction;
pub mod operator;
pub mod recurrence;
pub mod resolvent;
pub mod scalar;
pub mod scaled;
pub mod scan;

pub use error::{Error, Result};
pub use jfraction::{
    convergents, geometric_subsequence, jfraction_to_moments, moments_to_jfraction,
    remainder_diagnostics, ConvergentTable, GeometricSubsequence, JFraction, MomentSequence,
    RemainderDiagnostics, SubsequenceVerdict,
};
pub use operator::{build_operator, CoefficientSpec, NormBound, OperatorModel, SpecKind, TailValues};
pub use recurrence::{
    casorati_residual, casorati_residual_p, eigen_series_test, evaluate_qp, evaluate_remainder,
    growth_exponent, RecurrenceTrace, RemainderTrace, SeriesVerdict, Verdict,
};
pub use resolvent::{
    classify_point, decay_fit, estimate_gamma, finite_section_inverse, resolvent_entry,
    ClassifyParams, DecayFit, DecayVerdict, GammaEstimate, Label, PointClassification,
};
pub use scalar::{DoubleDouble, Real};
pub use scaled::ScaledComplex;
pub use scan::{export_csv, export_heatmap, scan, HeatmapChannel, ScanRegion, ScanResult};

/// Complex number over `f64`.
pub type C64 = num_complex::Complex<f64>;
/// Complex number over [`DoubleDouble`].
pub type Cdd = num_complex::Complex<DoubleDouble>;

pub type Operator = OperatorModel<f64>;
pub type OperatorDd = OperatorModel<DoubleDouble>;
pub type Trace = RecurrenceTrace<f64>;
pub type TraceDd = RecurrenceTrace<DoubleDouble>;
