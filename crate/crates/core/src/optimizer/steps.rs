use super::config::RsmConfig;
use super::trace::{
    CenterRecord, Decision, DescentRecord, LinePoint, LineSearchResult, RsmError, RsmTrace, SecondOrderRecord,
    StopReason,
};
use super::Oracle;
use crate::basis::Basis;
use crate::doe::{
    ccd, fractional_factorial, full_factorial_2, lift_design_scaled, positivity_filter, FactorialPart,
    MultivariateDesign, PointRole,
};
use crate::error::{Error, Result};
use crate::hilbert::GridFunction;
use crate::surface::{
    canonical_analysis, design_matrix, fit_least_squares, overall_f_test, FitResult, ModelOrder, StationaryKind,
};

/// Lifts `scale * design` around `center`, optionally drops non-positive
/// points, and evaluates the rest. Returns the design actually used.
fn evaluate_design<O: Oracle + ?Sized>(
    center: &GridFunction,
    basis: &Basis,
    design: &MultivariateDesign,
    scale: f64,
    positivity: bool,
    oracle: &mut O,
) -> Result<(MultivariateDesign, Vec<f64>)> {
    let mut lifted = lift_design_scaled(design, basis, center, scale)?;
    if positivity {
        lifted = positivity_filter(&lifted)?;
    }
    let y = oracle.evaluate_batch(&lifted.points)?;
    if y.len() != lifted.n() {
        return Err(Error::Oracle(format!("expected {} responses, got {}", lifted.n(), y.len())));
    }
    Ok((lifted.coded, y))
}

/// First-order fit on `scale * design` lifted around `center`. The
/// coefficients are per unit coded step, so `β̂_j ≈ scale·⟨∇m(center), φ_j⟩`.
pub fn estimate_gradient<O: Oracle + ?Sized>(
    center: &GridFunction,
    basis: &Basis,
    design: &MultivariateDesign,
    scale: f64,
    oracle: &mut O,
) -> Result<FitResult> {
    let (used, y) = evaluate_design(center, basis, design, scale, false, oracle)?;
    fit_least_squares(&design_matrix(&used, ModelOrder::First), &y)
}

pub fn stationarity_test(fit: &FitResult, threshold: f64) -> Result<Decision> {
    let test = overall_f_test(fit)?;
    Ok(if test.p_value > threshold { Decision::Stationary } else { Decision::Continue })
}

/// Two passes along `center - λ·direction`: the grid `lambdas`, then
/// `refine_points` values spread evenly between the neighbours of the first
/// argmin. Each λ is evaluated `replicates` times; the smallest mean wins,
/// ties going to the smaller λ.
pub fn line_search<O: Oracle + ?Sized>(
    center: &GridFunction,
    direction: &GridFunction,
    lambdas: &[f64],
    refine_points: usize,
    replicates: usize,
    oracle: &mut O,
) -> Result<LineSearchResult> {
    if direction.norm() == 0.0 {
        return Err(Error::ZeroDirection);
    }
    if lambdas.is_empty() || replicates == 0 {
        return Err(Error::InvalidArgument("line search needs λ values and replicates >= 1".into()));
    }
    let mut evaluations = 0;
    let mut pass = |lams: &[f64], pass: u8, oracle: &mut O| -> Result<Vec<LinePoint>> {
        let mut points = Vec::with_capacity(lams.len() * replicates);
        for &l in lams {
            let x = center.add(&direction.scaled(-l))?;
            points.extend(std::iter::repeat(x).take(replicates));
        }
        let y = oracle.evaluate_batch(&points)?;
        if y.len() != points.len() {
            return Err(Error::Oracle(format!("expected {} responses, got {}", points.len(), y.len())));
        }
        evaluations += points.len();
        Ok(lams
            .iter()
            .zip(y.chunks(replicates))
            .map(|(&lambda, ys)| LinePoint { lambda, mean: ys.iter().sum::<f64>() / replicates as f64, pass })
            .collect())
    };
    let mut table = pass(lambdas, 1, oracle)?;
    if refine_points > 0 {
        let k = argmin(&table);
        let lo = if k > 0 { lambdas[k - 1] } else { 0.0 };
        let hi = if k + 1 < lambdas.len() { lambdas[k + 1] } else { 2.0 * lambdas[k] - lo };
        if hi > lo {
            let step = (hi - lo) / (refine_points + 1) as f64;
            let fine: Vec<f64> = (1..=refine_points).map(|i| lo + step * i as f64).collect();
            table.extend(pass(&fine, 2, oracle)?);
        }
    }
    let lambda_star = table[argmin(&table)].lambda;
    Ok(LineSearchResult { lambda_star, table, evaluations })
}

fn argmin(table: &[LinePoint]) -> usize {
    let mut best = 0;
    for (i, p) in table.iter().enumerate() {
        let b = &table[best];
        if p.mean < b.mean || (p.mean == b.mean && p.lambda < b.lambda) {
            best = i;
        }
    }
    best
}

/// Evaluates `center` `replicates` times and appends it to the trace.
pub fn measure_center<O: Oracle + ?Sized>(
    trace: &mut RsmTrace,
    center: GridFunction,
    replicates: usize,
    oracle: &mut O,
) -> Result<()> {
    let ys = oracle.evaluate_batch(&vec![center.clone(); replicates])?;
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let std_error = if ys.len() > 1 {
        (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    trace.evaluations += ys.len();
    let true_value = oracle.noiseless(&center);
    trace.center_responses.push(CenterRecord { index: trace.centers.len(), mean, std_error, replicates: ys, true_value });
    trace.centers.push(center);
    Ok(())
}

fn first_order_design(config: &RsmConfig, d: usize) -> Result<MultivariateDesign> {
    match config.first_order {
        FactorialPart::Full => full_factorial_2(d),
        FactorialPart::Fractional { p } => fractional_factorial(d, p),
    }
}

fn current_center(trace: &RsmTrace) -> Result<GridFunction> {
    trace
        .current_center()
        .cloned()
        .ok_or_else(|| Error::InvalidArgument("the trace has no center yet".into()))
}

/// Gradient fit at the current center, then, unless it looks stationary, a
/// line search along `-Σ β̂_j φ_j` and a measured move to the best point.
pub fn descent_step<O: Oracle + ?Sized>(
    trace: &mut RsmTrace,
    config: &RsmConfig,
    basis: &Basis,
    oracle: &mut O,
) -> Result<Decision> {
    let center = current_center(trace)?;
    let design = first_order_design(config, basis.d())?;
    let (used, responses) = evaluate_design(&center, basis, &design, config.scale, config.positivity_filter, oracle)?;
    trace.evaluations += responses.len();
    let fit = fit_least_squares(&design_matrix(&used, ModelOrder::First), &responses)?;
    let test = overall_f_test(&fit)?;
    let decision = stationarity_test(&fit, config.stationarity_threshold)?;
    let gradient_norm = fit.gradient().iter().map(|b| b * b).sum::<f64>().sqrt();
    let mut record = DescentRecord {
        step: trace.steps.len(),
        design_points: used.n(),
        responses,
        fit,
        test,
        gradient_norm,
        decision,
        line_search: None,
    };
    if decision == Decision::Stationary {
        trace.steps.push(record);
        return Ok(decision);
    }
    let direction = basis.combine(record.fit.gradient())?;
    let ls = line_search(&center, &direction, &config.lambdas, config.refine_points, config.replicates(), oracle);
    let ls = match ls {
        Ok(ls) => ls,
        Err(e) => {
            trace.steps.push(record);
            return Err(e);
        }
    };
    trace.evaluations += ls.evaluations;
    let next = center.add(&direction.scaled(-ls.lambda_star))?;
    record.line_search = Some(ls);
    trace.steps.push(record);
    measure_center(trace, next, config.center_replicates(), oracle)?;
    Ok(decision)
}

/// CCD around the current center, second-order fit and canonical analysis.
/// The center moves by `ccd_scale · (-Ĥ⁻¹β̂)` in basis coordinates when Ĥ
/// indicates a minimum; otherwise it stays and the record carries a flag.
pub fn second_order_step<O: Oracle + ?Sized>(
    trace: &mut RsmTrace,
    config: &RsmConfig,
    basis: &Basis,
    oracle: &mut O,
) -> Result<()> {
    let center = current_center(trace)?;
    let mut spec = config.ccd_spec();
    spec.d = basis.d();
    let design = ccd(&spec)?;
    let (used, responses) =
        evaluate_design(&center, basis, &design, config.ccd_scale, config.positivity_filter, oracle)?;
    trace.evaluations += responses.len();
    let fit = fit_least_squares(&design_matrix(&used, ModelOrder::Second), &responses)?;
    let form = canonical_analysis(&fit)?;

    let factorial: Vec<usize> = (0..used.n()).filter(|&i| used.roles()[i] == PointRole::Factorial).collect();
    let factorial_test = used
        .select_rows(&factorial)
        .ok()
        .and_then(|f| {
            let y: Vec<f64> = factorial.iter().map(|&i| responses[i]).collect();
            fit_least_squares(&design_matrix(&f, ModelOrder::First), &y).ok()
        })
        .and_then(|fit| overall_f_test(&fit).ok());

    let (physical_offset, flag) = match (&form.stationary_offset, form.kind) {
        (Some(offset), StationaryKind::Minimum) => {
            (Some(offset.iter().map(|o| o * config.ccd_scale).collect::<Vec<f64>>()), None)
        }
        (_, kind) => (None, Some(format!("center kept: fitted stationary point is a {kind}"))),
    };
    let next = match &physical_offset {
        Some(offset) => Some(GridFunction::combination(&center, offset, basis.functions())?),
        None => None,
    };
    trace.second_order = Some(SecondOrderRecord {
        design_points: used.n(),
        scale: config.ccd_scale,
        responses,
        fit,
        form,
        factorial_test,
        physical_offset,
        flag,
    });
    if let Some(next) = next {
        measure_center(trace, next, config.center_replicates(), oracle)?;
    }
    Ok(())
}

/// Measures `start`, takes descent steps until the gradient looks
/// stationary or `max_steps` is reached, then one second-order step.
pub fn run_rsm<O: Oracle + ?Sized>(
    config: &RsmConfig,
    oracle: &mut O,
    start: &GridFunction,
    basis: &Basis,
) -> std::result::Result<RsmTrace, RsmError> {
    let mut trace = RsmTrace::default();
    match run_into(&mut trace, config, oracle, start, basis) {
        Ok(()) => Ok(trace),
        Err(source) => {
            trace.stop_reason = Some(StopReason::Aborted(source.to_string()));
            Err(RsmError { partial: Box::new(trace), source })
        }
    }
}

fn run_into<O: Oracle + ?Sized>(
    trace: &mut RsmTrace,
    config: &RsmConfig,
    oracle: &mut O,
    start: &GridFunction,
    basis: &Basis,
) -> Result<()> {
    config.validate()?;
    if config.d != basis.d() {
        return Err(Error::DimensionMismatch { expected: config.d, actual: basis.d() });
    }
    measure_center(trace, start.clone(), config.center_replicates(), oracle)?;
    let mut reason = StopReason::MaxSteps;
    for _ in 0..config.max_steps {
        if descent_step(trace, config, basis, oracle)? == Decision::Stationary {
            reason = StopReason::Stationary;
            break;
        }
    }
    second_order_step(trace, config, basis, oracle)?;
    trace.stop_reason = Some(reason);
    Ok(())
}
