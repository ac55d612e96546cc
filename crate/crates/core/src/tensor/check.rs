use super::{ParamStore, Tape, TensorError, Var};

/// Denominator floor of the relative error, so coordinates whose true
/// gradient is zero are compared on an absolute scale.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Worst relative error over coordinates whose `±eps` evaluations keep
    /// the branch pattern of the unperturbed pass.
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst such coordinate.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
    /// Coordinates whose stencil crosses a relu or maxpool kink. Their
    /// central differences do not estimate a derivative.
    pub kinks: usize,
    /// Worst relative error over all checked coordinates, kinks included.
    pub max_rel_error_all: f64,
}

fn eval<F>(f: &F, params: &ParamStore) -> Result<(f64, Vec<usize>), TensorError>
where
    F: for<'a> Fn(&mut Tape<'a>, &'a ParamStore) -> Result<Var, TensorError>,
{
    let mut tape = Tape::new();
    let loss = f(&mut tape, params)?;
    match tape.value(loss) {
        [x] => Ok((*x, tape.branch_pattern())),
        _ => Err(TensorError::NonScalarLoss(tape.shape(loss).to_vec())),
    }
}

/// Compares autodiff gradients of `f` against central differences
/// `(f(x + eps) - f(x - eps)) / (2 eps)`. With `per_param = Some(k)` only
/// `k` evenly spaced coordinates of each parameter are perturbed.
///
/// A coordinate whose perturbed passes flip a relu sign or move a maxpool
/// choice is counted in `kinks` and kept out of `max_rel_error`.
pub fn finite_diff_check<F>(
    params: &ParamStore,
    eps: f64,
    per_param: Option<usize>,
    f: F,
) -> Result<GradCheckReport, TensorError>
where
    F: for<'a> Fn(&mut Tape<'a>, &'a ParamStore) -> Result<Var, TensorError>,
{
    let mut tape = Tape::new();
    let loss = f(&mut tape, params)?;
    let grads = tape.backward(loss)?;
    let pattern = tape.branch_pattern();
    let analytic: std::collections::HashMap<String, Vec<f64>> = tape.param_grads(grads).into_iter().collect();

    let mut work = params.clone();
    let mut report = GradCheckReport { max_rel_error: 0.0, worst: None, checked: 0, kinks: 0, max_rel_error_all: 0.0 };
    let names: Vec<String> = params.names().map(String::from).collect();
    for name in names {
        let n = params.get(&name)?.numel();
        let coords: Vec<usize> = match per_param {
            Some(k) if k < n => (0..k).map(|i| i * n / k).collect(),
            _ => (0..n).collect(),
        };
        for i in coords {
            let orig = params.get(&name)?.data()[i];
            work.get_mut(&name)?.data_mut()[i] = orig + eps;
            let (up, up_pattern) = eval(&f, &work)?;
            work.get_mut(&name)?.data_mut()[i] = orig - eps;
            let (down, down_pattern) = eval(&f, &work)?;
            work.get_mut(&name)?.data_mut()[i] = orig;
            let fd = (up - down) / (2.0 * eps);
            let a = analytic.get(&name).map_or(0.0, |g| g[i]);
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(REL_ERROR_FLOOR);
            report.checked += 1;
            report.max_rel_error_all = report.max_rel_error_all.max(rel);
            if up_pattern != pattern || down_pattern != pattern {
                report.kinks += 1;
                continue;
            }
            if report.worst.is_none() || rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((name.clone(), i));
            }
        }
    }
    Ok(report)
}
