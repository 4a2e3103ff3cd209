use crate::energy::ScalarProfile;
use crate::error::Result;
use crate::tensor::SquareMatrix;

/// Anything that can be evaluated on a deformation gradient: strain measures
/// and elastic energies.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;

    fn label(&self) -> String;

    fn value(&self, f: &SquareMatrix) -> Result<f64>;

    /// Analytic gradient, when one is known.
    fn gradient(&self, _f: &SquareMatrix) -> Option<Result<SquareMatrix>> {
        None
    }

    /// For `W = W_iso(F) + W_vol(det F)`: the isochoric part and the volumetric
    /// profile. Line derivatives of the volumetric part along rank-one
    /// directions are then taken in closed form.
    fn volumetric_split(&self) -> Option<(&dyn ScalarField, &ScalarProfile)> {
        None
    }
}
