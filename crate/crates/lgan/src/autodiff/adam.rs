use super::{AutodiffError, ParamStore};
use crate::matrix::Matrix;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First and second moments, one pair per parameter.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<Matrix>,
    pub v: Vec<Matrix>,
}

impl AdamState {
    pub fn new(params: &ParamStore) -> Self {
        let zeros: Vec<Matrix> = params.values().iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect();
        AdamState { step: 0, m: zeros.clone(), v: zeros }
    }
}

/// One bias-corrected Adam update. Gradients are validated before any
/// parameter moves, so a rejected step leaves everything untouched.
pub fn adam_step(
    params: &mut ParamStore,
    grads: &[Matrix],
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<(), AutodiffError> {
    for (i, g) in grads.iter().enumerate() {
        let name = params.name(i);
        let expected = params.values()[i].shape();
        if g.shape() != expected || state.m[i].shape() != expected {
            return Err(AutodiffError::ParamShape { name: name.to_string(), expected, found: g.shape() });
        }
        if !g.all_finite() {
            return Err(AutodiffError::NonFiniteGradient(name.to_string()));
        }
    }
    if grads.len() != params.len() {
        return Err(AutodiffError::ParamShape {
            name: "<store>".into(),
            expected: (params.len(), 1),
            found: (grads.len(), 1),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (i, g) in grads.iter().enumerate() {
        let p = params.value_mut(i).as_mut_slice();
        let m = state.m[i].as_mut_slice();
        let v = state.v[i].as_mut_slice();
        for (((p, m), v), &g) in p.iter_mut().zip(m).zip(v).zip(g.as_slice()) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            *p -= cfg.lr * (*m / c1) / ((*v / c2).sqrt() + cfg.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(values: &[f64]) -> ParamStore {
        let mut s = ParamStore::new();
        s.add("w", Matrix::from_vec(1, values.len(), values.to_vec()));
        s
    }

    #[test]
    fn zero_gradient_keeps_params_and_decays_moments() {
        let mut p = store(&[1.0, -2.0]);
        let mut st = AdamState::new(&p);
        st.m[0] = Matrix::from_vec(1, 2, vec![0.5, 0.5]);
        st.v[0] = Matrix::from_vec(1, 2, vec![0.25, 0.25]);
        let cfg = AdamConfig { lr: 0.0, ..AdamConfig::default() };
        adam_step(&mut p, &[Matrix::zeros(1, 2)], &mut st, &cfg).unwrap();
        assert_eq!(p.values()[0].as_slice(), &[1.0, -2.0]);
        assert!((st.m[0].get(0, 0) - 0.45).abs() < 1e-15);
        assert!((st.v[0].get(0, 0) - 0.25 * 0.999).abs() < 1e-15);
    }

    #[test]
    fn first_step_matches_closed_form() {
        // from zero moments: m̂ = g, v̂ = g², so the update is lr·g/(|g|+ε)
        let g = [0.3, -4.0, 1e-3];
        let mut p = store(&[0.0; 3]);
        let mut st = AdamState::new(&p);
        let cfg = AdamConfig { lr: 0.01, ..AdamConfig::default() };
        adam_step(&mut p, &[Matrix::from_vec(1, 3, g.to_vec())], &mut st, &cfg).unwrap();
        for (i, gi) in g.iter().enumerate() {
            let expected = -0.01 * gi / (gi.abs() + 1e-8);
            assert!((p.values()[0].get(0, i) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn two_steps_follow_the_recurrence() {
        let (b1, b2, lr, eps) = (0.9f64, 0.999f64, 0.1, 1e-8);
        let g = 2.0;
        let mut p = store(&[1.0]);
        let mut st = AdamState::new(&p);
        let cfg = AdamConfig { lr, beta1: b1, beta2: b2, eps };
        for _ in 0..2 {
            adam_step(&mut p, &[Matrix::filled(1, 1, g)], &mut st, &cfg).unwrap();
        }
        // hand-rolled
        let (mut x, mut m, mut v) = (1.0, 0.0, 0.0);
        for t in 1..=2 {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            x -= lr * mh / (vh.sqrt() + eps);
        }
        assert_eq!(st.step, 2);
        assert!((p.values()[0].get(0, 0) - x).abs() < 1e-15);
        assert!((st.m[0].get(0, 0) - m).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_names_the_parameter() {
        let mut p = store(&[1.0]);
        let mut st = AdamState::new(&p);
        let err = adam_step(&mut p, &[Matrix::filled(1, 1, f64::NAN)], &mut st, &AdamConfig::default()).unwrap_err();
        assert!(err.to_string().contains("`w`"), "{err}");
        assert_eq!(st.step, 0);
        assert_eq!(p.values()[0].get(0, 0), 1.0);
    }
}
