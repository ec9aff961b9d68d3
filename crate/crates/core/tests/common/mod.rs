#![allow(dead_code)]

use burkholder::stat_core::{Instance, Potential, Statistic};
use burkholder::Result;
use rand::RngCore;

/// U ≡ V ≡ `value` with T ≡ 0.
pub struct Flat {
    pub value: f64,
    pub l: f64,
}

impl Potential for Flat {
    fn name(&self) -> String {
        "flat".into()
    }

    fn signature(&self) -> String {
        "flat".into()
    }

    fn zero(&self) -> Statistic {
        Statistic::ScalarVec { b: 0.0, x: vec![0.0] }
    }

    fn eval(&self, _t: usize, _zeta: &Statistic) -> Result<f64> {
        Ok(self.value)
    }

    fn bound(&self, _zeta: &Statistic) -> Result<f64> {
        Ok(self.value)
    }

    fn stat_map(&self, _x: &Instance, _y_hat: f64, _delta: f64) -> Result<Statistic> {
        Ok(self.zero())
    }

    fn lipschitz(&self) -> f64 {
        self.l
    }

    fn convex_in_delta(&self) -> bool {
        true
    }

    fn linear_in_prediction(&self) -> bool {
        false
    }

    fn anchor(&self) -> Instance {
        Instance::Vector(vec![0.0])
    }

    fn sample_instance(&self, _rng: &mut dyn RngCore) -> Instance {
        Instance::Vector(vec![1.0])
    }
}
