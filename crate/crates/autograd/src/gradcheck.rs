//! Central finite differences for checking analytic gradients.
//!
//! These helpers only evaluate the function being differentiated; they never
//! touch the backward pass, so they can serve as an oracle for it.

use rand::Rng;

use crate::{Graph, ParamStore, Tensor, Var};

/// Step used by [`check_graph`] and [`check_parameters`].
pub const STEP: f64 = 1e-5;
/// Coordinates sampled per tensor when it is larger than this.
pub const MAX_COORDS: usize = 48;

/// Error metric used by the gradient checks: `|a - b| / max(1, |a|, |b|)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic.iter().zip(numeric).map(|(&a, &n)| relative_error(a, n)).fold(0.0, f64::max)
}

/// `(f(x + h e_i) - f(x - h e_i)) / 2h` for each `i` in `coords`.
pub fn central_difference(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], coords: &[usize], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    coords
        .iter()
        .map(|&i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Relative gap between central differences at `h` and `h / 2` above which a
/// coordinate is taken to straddle a ReLU or max-pool kink.
pub const KINK_TOL: f64 = 1e-5;

/// Outcome of a gradient check.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GradReport {
    /// Worst [`relative_error`] between analytic and central-difference slopes.
    pub worst: f64,
    /// Coordinates whose full- and half-step differences disagree by more than [`KINK_TOL`].
    pub kinks: usize,
    pub checked: usize,
}

impl GradReport {
    fn merge(&mut self, other: GradReport) {
        self.worst = self.worst.max(other.worst);
        self.kinks += other.kinks;
        self.checked += other.checked;
    }

    /// `f` evaluates the function with the coordinate offset by its argument.
    fn record(&mut self, analytic: f64, mut f: impl FnMut(f64) -> f64) {
        let full = (f(STEP) - f(-STEP)) / (2.0 * STEP);
        let half = (f(STEP / 2.0) - f(-STEP / 2.0)) / STEP;
        if relative_error(full, half) > KINK_TOL {
            self.kinks += 1;
        }
        self.worst = self.worst.max(relative_error(analytic, full));
        self.checked += 1;
    }
}

/// Reduces `out` to a scalar through fixed weights so every element
/// contributes a distinct amount.
fn project(g: &mut Graph, out: Var, weights: &[f64]) -> Var {
    let len = g.value(out).len();
    let flat = g.reshape(out, vec![len]).unwrap();
    let w = g.constant(Tensor::new(vec![1, len], weights.to_vec()).unwrap());
    let b = g.constant(Tensor::scalar(0.0));
    g.linear(flat, w, b).unwrap()
}

fn sample_coords(len: usize, rng: &mut impl Rng) -> Vec<usize> {
    if len <= MAX_COORDS {
        (0..len).collect()
    } else {
        (0..MAX_COORDS).map(|_| rng.random_range(0..len)).collect()
    }
}

/// Compares backward-pass gradients of every input of `build` against
/// central differences under a random projection of its output.
pub fn check_graph<F>(mut build: F, inputs: &[Tensor], rng: &mut impl Rng) -> GradReport
where
    F: FnMut(&mut Graph, &[Var]) -> Var,
{
    let mut eval = |values: &[Tensor], weights: Option<&[f64]>| -> (Graph, Vec<Var>, Var) {
        let mut g = Graph::new();
        let vars: Vec<Var> = values.iter().map(|t| g.input(t.clone())).collect();
        let out = build(&mut g, &vars);
        let loss = match weights {
            Some(w) => project(&mut g, out, w),
            None => out,
        };
        (g, vars, loss)
    };
    let (g0, _, out0) = eval(inputs, None);
    let weights: Vec<f64> = (0..g0.value(out0).len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    drop(g0);

    let (g, vars, loss) = eval(inputs, Some(&weights));
    let grads = g.backward(loss).unwrap();
    let mut report = GradReport::default();
    for (k, input) in inputs.iter().enumerate() {
        let analytic = grads.get(vars[k]).map(|s| s.to_vec()).unwrap_or_else(|| vec![0.0; input.len()]);
        let mut vals = inputs.to_vec();
        for i in sample_coords(input.len(), rng) {
            let x = input.data()[i];
            report.record(analytic[i], |d| {
                vals[k].data_mut()[i] = x + d;
                let (g, _, l) = eval(&vals, Some(&weights));
                vals[k].data_mut()[i] = x;
                g.item(l).unwrap()
            });
        }
    }
    report
}

/// Like [`check_graph`], but differentiates with respect to the parameters
/// of the store returned by `store`. `build` runs the model on a fresh graph.
pub fn check_parameters<M, S, F>(model: &mut M, mut store: S, mut build: F, rng: &mut impl Rng) -> GradReport
where
    S: FnMut(&mut M) -> &mut ParamStore,
    F: FnMut(&mut M, &mut Graph) -> Var,
{
    let mut g = Graph::new();
    let out = build(model, &mut g);
    let weights: Vec<f64> = (0..g.value(out).len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let loss = project(&mut g, out, &weights);
    let grads = g.backward(loss).unwrap();
    store(model).zero_grad();
    store(model).accumulate(&grads);

    let mut eval = |model: &mut M| -> f64 {
        let mut g = Graph::new();
        let out = build(model, &mut g);
        let loss = project(&mut g, out, &weights);
        g.item(loss).unwrap()
    };
    let mut report = GradReport::default();
    for k in 0..store(model).params().len() {
        let p = &store(model).params()[k];
        let analytic = p.grad.clone().unwrap_or_else(|| vec![0.0; p.value.len()]);
        for i in sample_coords(p.value.len(), rng) {
            let x = store(model).params()[k].value.data()[i];
            report.record(analytic[i], |d| {
                store(model).params_mut()[k].value.data_mut()[i] = x + d;
                let v = eval(model);
                store(model).params_mut()[k].value.data_mut()[i] = x;
                v
            });
        }
    }
    store(model).zero_grad();
    report
}

/// Runs `check` on fresh random instances until `instances` of them are
/// free of kinks, giving up after `max_attempts`. Returns the merged report
/// of the accepted instances and how many were discarded.
pub fn check_smooth_instances<F>(instances: usize, max_attempts: usize, mut check: F) -> (GradReport, usize)
where
    F: FnMut(usize) -> GradReport,
{
    let mut merged = GradReport::default();
    let mut accepted = 0;
    let mut discarded = 0;
    for attempt in 0..max_attempts {
        if accepted == instances {
            break;
        }
        let r = check(attempt);
        if r.kinks > 0 {
            discarded += 1;
        } else {
            merged.merge(r);
            accepted += 1;
        }
    }
    if accepted < instances {
        merged.worst = f64::INFINITY;
    }
    (merged, discarded)
}
