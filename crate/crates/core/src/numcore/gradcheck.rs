use super::{Graph, NumError, ParamStore, Var};

#[derive(Clone, Copy, Debug)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub step: f64,
    pub tolerance: f64,
    /// Denominator floor of the relative error.
    pub floor: f64,
    /// Caps the number of entries perturbed per tensor (evenly strided).
    pub max_entries_per_param: Option<usize>,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            step: 1e-5,
            tolerance: 1e-3,
            floor: 1e-6,
            max_entries_per_param: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamCheck {
    pub name: String,
    pub max_rel_error: f64,
    pub entries_checked: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub params: Vec<ParamCheck>,
    pub passed: bool,
}

pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(floor);
    (analytic - numeric).abs() / denom
}

/// Compares reverse-mode gradients of the scalar built by `f` against
/// central finite differences, all in 64-bit arithmetic.
pub fn grad_check<F>(
    store: &ParamStore<f64>,
    f: F,
    options: GradCheckOptions,
) -> Result<GradCheckReport, NumError>
where
    F: Fn(&mut Graph<f64>) -> Result<Var, NumError>,
{
    let eval = |s: &ParamStore<f64>| -> Result<f64, NumError> {
        let mut g = Graph::new(s);
        let out = f(&mut g)?;
        Ok(g.value(out).data()[0])
    };

    let analytic = {
        let mut g = Graph::new(store);
        let out = f(&mut g)?;
        g.backward(out)?
    };

    let mut shadow = store.clone();
    let mut params = Vec::with_capacity(store.len());
    for id in store.ids() {
        let n = store.value(id).len();
        let stride = match options.max_entries_per_param {
            Some(cap) if cap > 0 && n > cap => n.div_ceil(cap),
            _ => 1,
        };
        let mut worst: f64 = 0.0;
        let mut checked = 0;
        for k in (0..n).step_by(stride) {
            let original = shadow.value(id).data()[k];
            shadow.get_mut(id).value.data_mut()[k] = original + options.step;
            let plus = eval(&shadow)?;
            shadow.get_mut(id).value.data_mut()[k] = original - options.step;
            let minus = eval(&shadow)?;
            shadow.get_mut(id).value.data_mut()[k] = original;
            let numeric = (plus - minus) / (2.0 * options.step);
            let a = analytic.get(id).map_or(0.0, |t| t.data()[k]);
            worst = worst.max(relative_error(a, numeric, options.floor));
            checked += 1;
        }
        params.push(ParamCheck {
            name: store.get(id).name.clone(),
            max_rel_error: worst,
            entries_checked: checked,
        });
    }
    let max_rel_error = params.iter().map(|p| p.max_rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        max_rel_error,
        passed: max_rel_error <= options.tolerance,
        params,
    })
}
