//! Fixed-step RK4 integration of the curvature ODE `R' = R² + R#`.

use crate::curvature::CurvatureOperator;
use crate::error::{Error, Result};
use crate::lie::StructureConstants;

#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub times: Vec<f64>,
    pub operators: Vec<CurvatureOperator>,
    /// Last accepted time before the operator norm exceeded the cap.
    pub blow_up_time: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    pub dt: f64,
    pub t_max: f64,
    pub norm_cap: f64,
    /// Record every `record_every`-th accepted step (the initial state and
    /// the final accepted state are always recorded).
    pub record_every: usize,
}

impl FlowOptions {
    pub fn new(dt: f64, t_max: f64, norm_cap: f64) -> Self {
        Self { dt, t_max, norm_cap, record_every: 1 }
    }
}

pub fn flow(r0: &CurvatureOperator, dt: f64, t_max: f64, norm_cap: f64) -> Result<FlowTrace> {
    flow_with(r0, &FlowOptions::new(dt, t_max, norm_cap))
}

pub fn rk4_step(r: &CurvatureOperator, dt: f64, sc: &StructureConstants) -> CurvatureOperator {
    let n = r.n();
    let f = |x: &CurvatureOperator| x.ode_rhs(sc);
    let k1 = f(r);
    let k2 = f(&shift(r, &k1, 0.5 * dt));
    let k3 = f(&shift(r, &k2, 0.5 * dt));
    let k4 = f(&shift(r, &k3, dt));
    let incr = (k1.matrix() + k2.matrix() * 2.0 + k3.matrix() * 2.0 + k4.matrix()) * (dt / 6.0);
    CurvatureOperator::symmetrized(n, r.matrix() + incr)
}

fn shift(r: &CurvatureOperator, k: &CurvatureOperator, h: f64) -> CurvatureOperator {
    CurvatureOperator::symmetrized(r.n(), r.matrix() + k.matrix() * h)
}

pub fn flow_with(r0: &CurvatureOperator, opts: &FlowOptions) -> Result<FlowTrace> {
    if !(opts.dt > 0.0) || !opts.dt.is_finite() {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {}", opts.dt)));
    }
    if !(opts.t_max >= 0.0) {
        return Err(Error::InvalidParameter(format!("t_max must be nonnegative, got {}", opts.t_max)));
    }
    if !(opts.norm_cap > r0.operator_norm()) {
        return Err(Error::InvalidParameter(format!(
            "norm_cap {} must exceed the initial operator norm {}",
            opts.norm_cap,
            r0.operator_norm()
        )));
    }
    let every = opts.record_every.max(1);
    let sc = StructureConstants::new(r0.n());
    let steps = (opts.t_max / opts.dt - 1e-9).ceil().max(0.0) as usize;
    let mut trace = FlowTrace { times: vec![0.0], operators: vec![r0.clone()], blow_up_time: None };
    let mut r = r0.clone();
    let mut t = 0.0;
    for s in 1..=steps {
        let h = (opts.t_max - t).min(opts.dt);
        let next = rk4_step(&r, h, &sc);
        let nrm = next.operator_norm();
        if !nrm.is_finite() || nrm > opts.norm_cap {
            trace.blow_up_time = Some(t);
            break;
        }
        r = next;
        t = if s == steps { opts.t_max } else { s as f64 * opts.dt };
        if s % every == 0 || s == steps {
            trace.times.push(t);
            trace.operators.push(r.clone());
        }
    }
    if trace.blow_up_time.is_some() && trace.times.last() != Some(&t) {
        trace.times.push(t);
        trace.operators.push(r);
    }
    Ok(trace)
}

impl FlowTrace {
    /// CSV with columns `t, opnorm, min_eig` followed by any extra columns.
    pub fn to_csv(&self, extra: &[(String, Vec<f64>)]) -> String {
        let mut out = String::from("t,opnorm,min_eig");
        for (name, _) in extra {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (k, (t, r)) in self.times.iter().zip(&self.operators).enumerate() {
            let ev = r.eigenvalues();
            let opn = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            out.push_str(&format!("{t:.10e},{opn:.10e},{:.10e}", ev.first().cloned().unwrap_or(0.0)));
            for (_, col) in extra {
                out.push_str(&format!(",{:.10e}", col.get(k).cloned().unwrap_or(f64::NAN)));
            }
            out.push('\n');
        }
        out
    }
}
