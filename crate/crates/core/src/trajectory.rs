use nalgebra::DVector;

/// A candidate solution `t ↦ (x(t), ẋ(t))` that can be checked against a
/// problem without knowing how it was produced.
pub trait Trajectory {
    fn dim(&self) -> usize;

    fn state(&self, t: f64) -> DVector<f64>;

    fn derivative(&self, t: f64) -> DVector<f64>;
}

/// Wraps a trajectory and adds a constant offset to one state coordinate,
/// leaving the derivative untouched. Used to check that verification
/// rejects corrupted solutions.
#[derive(Debug, Clone)]
pub struct Perturbed<T> {
    inner: T,
    coordinate: usize,
    offset: f64,
}

impl<T: Trajectory> Perturbed<T> {
    pub fn new(inner: T, coordinate: usize, offset: f64) -> Self {
        assert!(coordinate < inner.dim(), "perturbed coordinate out of range");
        Self { inner, coordinate, offset }
    }
}

impl<T: Trajectory> Trajectory for Perturbed<T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn state(&self, t: f64) -> DVector<f64> {
        let mut x = self.inner.state(t);
        x[self.coordinate] += self.offset;
        x
    }

    fn derivative(&self, t: f64) -> DVector<f64> {
        self.inner.derivative(t)
    }
}

impl<T: Trajectory + ?Sized> Trajectory for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn state(&self, t: f64) -> DVector<f64> {
        (**self).state(t)
    }

    fn derivative(&self, t: f64) -> DVector<f64> {
        (**self).derivative(t)
    }
}
