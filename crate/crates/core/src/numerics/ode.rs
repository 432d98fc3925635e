use nalgebra::DVector;
use serde::Serialize;

use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory<T: Scalar> {
    pub times: Vec<T>,
    pub states: Vec<DVector<T>>,
    /// Time at which the state first became non-finite; the trajectory is
    /// truncated before it.
    pub blow_up: Option<T>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(T, &DVector<T>)> {
        self.times.last().copied().zip(self.states.last())
    }
}

/// Classical fourth-order Runge-Kutta with a fixed step; the final step is
/// shortened to land exactly on `t_end`.
pub fn integrate_rk4<T, F>(
    mut field: F,
    x0: &DVector<T>,
    t_end: T,
    step: T,
) -> Result<Trajectory<T>>
where
    T: Scalar,
    F: FnMut(T, &DVector<T>) -> Result<DVector<T>>,
{
    if !(step > T::zero()) || !(t_end >= T::zero()) {
        return Err(Error::Evaluation(
            "step must be positive and t_end nonnegative".into(),
        ));
    }
    let steps = (t_end / step).ceil().to_usize().unwrap_or(0);
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut t = T::zero();
    let mut x = x0.clone();
    times.push(t);
    states.push(x.clone());
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    for k in 0..steps {
        let next_t = if k + 1 == steps {
            t_end
        } else {
            T::from_usize_lossy(k + 1) * step
        };
        let h = next_t - t;
        let k1 = field(t, &x)?;
        let k2 = field(t + h / two, &(&x + &k1 * (h / two)))?;
        let k3 = field(t + h / two, &(&x + &k2 * (h / two)))?;
        let k4 = field(t + h, &(&x + &k3 * h))?;
        let nx = &x + (k1 + k2 * two + k3 * two + k4) * (h / six);
        if nx.iter().any(|c| !c.is_finite()) {
            return Ok(Trajectory {
                times,
                states,
                blow_up: Some(next_t),
            });
        }
        t = next_t;
        x = nx;
        times.push(t);
        states.push(x.clone());
    }
    Ok(Trajectory {
        times,
        states,
        blow_up: None,
    })
}
