//! Relative cap error metrics and branch-wise interpolation for comparing a
//! reduced-order solution against a reference solution.
//!
//! Pressure differences are normalized per cap by the reference time-summed
//! pressure, flow differences by the reference flow amplitude. The inlet cap
//! is excluded from all flow errors since its flow is prescribed. Systolic
//! and diastolic instants come from the argmax/argmin of the reference inlet
//! flow.

use thiserror::Error;

/// Pressure and flow of one cap over one cycle on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CapSeries {
    pub cap_id: String,
    pub is_inlet: bool,
    pub pressure: Vec<f64>,
    pub flow: Vec<f64>,
}

impl CapSeries {
    pub fn len(&self) -> usize {
        self.pressure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pressure.is_empty()
    }
}

/// The eight relative cap error metrics, dimensionless, plus the systolic
/// and diastolic sample indices used for the instant metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub pressure_avg: f64,
    pub flow_avg: f64,
    pub pressure_max: f64,
    pub flow_max: f64,
    pub pressure_sys: f64,
    pub flow_sys: f64,
    pub pressure_dia: f64,
    pub flow_dia: f64,
    pub t_sys: usize,
    pub t_dia: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("cap sets do not match: {0}")]
    MismatchedCaps(String),
    #[error("cap '{0}' has zero reference flow amplitude")]
    ZeroFlowAmplitude(String),
    #[error("cap '{0}' has non-positive reference pressure sum; cannot normalize")]
    NonPositivePressureScale(String),
    #[error("expected exactly one inlet cap, found {0}")]
    InletCount(usize),
    #[error("series are empty")]
    Empty,
    #[error("interpolation query {query} outside [{low}, {high}]")]
    OutOfRange { query: f64, low: f64, high: f64 },
    #[error("positions must be strictly increasing")]
    NonMonotonic,
}

/// Indices of the maximum and minimum of the reference inlet flow; first
/// occurrence wins ties.
pub fn systole_diastole_indices(inlet_flow: &[f64]) -> (usize, usize) {
    let mut t_sys = 0;
    let mut t_dia = 0;
    for (i, &q) in inlet_flow.iter().enumerate() {
        if q > inlet_flow[t_sys] {
            t_sys = i;
        }
        if q < inlet_flow[t_dia] {
            t_dia = i;
        }
    }
    (t_sys, t_dia)
}

/// Evaluates the eight relative cap error metrics of `test` against
/// `reference`. Caps are matched by id; both sets must agree in ids, inlet
/// flags, and sample counts, with exactly one cap flagged as the inlet.
pub fn cap_errors(reference: &[CapSeries], test: &[CapSeries]) -> Result<ErrorReport, MetricsError> {
    if reference.is_empty() {
        return Err(MetricsError::Empty);
    }
    if reference.len() != test.len() {
        return Err(MetricsError::MismatchedCaps(format!(
            "{} reference caps vs {} test caps",
            reference.len(),
            test.len()
        )));
    }
    let mut pairs: Vec<(&CapSeries, &CapSeries)> = Vec::with_capacity(reference.len());
    for r in reference {
        let t = test
            .iter()
            .find(|t| t.cap_id == r.cap_id)
            .ok_or_else(|| MetricsError::MismatchedCaps(format!("cap '{}' missing from test set", r.cap_id)))?;
        if t.is_inlet != r.is_inlet {
            return Err(MetricsError::MismatchedCaps(format!(
                "cap '{}' inlet flag differs between sets",
                r.cap_id
            )));
        }
        pairs.push((r, t));
    }

    let n_t = reference[0].len();
    for (r, t) in &pairs {
        if r.len() != n_t || t.len() != n_t || r.flow.len() != n_t || t.flow.len() != n_t {
            return Err(MetricsError::MismatchedCaps(format!(
                "cap '{}' sample count differs from {n_t}",
                r.cap_id
            )));
        }
    }
    if n_t == 0 {
        return Err(MetricsError::Empty);
    }

    let inlets: Vec<&CapSeries> = pairs.iter().map(|(r, _)| *r).filter(|r| r.is_inlet).collect();
    if inlets.len() != 1 {
        return Err(MetricsError::InletCount(inlets.len()));
    }
    let (t_sys, t_dia) = systole_diastole_indices(&inlets[0].flow);

    let n_cap = pairs.len();
    let n_cap_flow = pairs.iter().filter(|(r, _)| !r.is_inlet).count();

    let mut pressure_avg = 0.0;
    let mut pressure_max = 0.0;
    let mut pressure_sys = 0.0;
    let mut pressure_dia = 0.0;
    let mut flow_avg = 0.0;
    let mut flow_max = 0.0;
    let mut flow_sys = 0.0;
    let mut flow_dia = 0.0;

    for (r, t) in &pairs {
        let scale: f64 = r.pressure.iter().sum();
        if !(scale > 0.0) {
            return Err(MetricsError::NonPositivePressureScale(r.cap_id.clone()));
        }
        let mut abs_sum = 0.0;
        let mut abs_max = 0.0f64;
        for (pr, pt) in r.pressure.iter().zip(&t.pressure) {
            let d = (pt - pr).abs();
            abs_sum += d;
            abs_max = abs_max.max(d);
        }
        let d_sys = (t.pressure[t_sys] - r.pressure[t_sys]).abs();
        let d_dia = (t.pressure[t_dia] - r.pressure[t_dia]).abs();
        debug_assert!(d_sys <= abs_max && d_dia <= abs_max);
        pressure_avg += abs_sum / scale;
        pressure_max += abs_max / scale;
        pressure_sys += d_sys / scale;
        pressure_dia += d_dia / scale;

        if !r.is_inlet {
            let amplitude = max_of(&r.flow) - min_of(&r.flow);
            if amplitude == 0.0 {
                return Err(MetricsError::ZeroFlowAmplitude(r.cap_id.clone()));
            }
            let mut abs_sum = 0.0;
            let mut abs_max = 0.0f64;
            for (qr, qt) in r.flow.iter().zip(&t.flow) {
                let d = (qt - qr).abs();
                abs_sum += d;
                abs_max = abs_max.max(d);
            }
            flow_avg += abs_sum / amplitude;
            flow_max += abs_max / amplitude;
            flow_sys += (t.flow[t_sys] - r.flow[t_sys]).abs() / amplitude;
            flow_dia += (t.flow[t_dia] - r.flow[t_dia]).abs() / amplitude;
        }
    }

    let n_cap = n_cap as f64;
    let n_t_f = n_t as f64;
    let report = ErrorReport {
        pressure_avg: pressure_avg / n_cap,
        pressure_max: pressure_max * n_t_f / n_cap,
        pressure_sys: pressure_sys * n_t_f / n_cap,
        pressure_dia: pressure_dia * n_t_f / n_cap,
        flow_avg: if n_cap_flow == 0 { 0.0 } else { flow_avg / (n_cap_flow as f64 * n_t_f) },
        flow_max: if n_cap_flow == 0 { 0.0 } else { flow_max / n_cap_flow as f64 },
        flow_sys: if n_cap_flow == 0 { 0.0 } else { flow_sys / n_cap_flow as f64 },
        flow_dia: if n_cap_flow == 0 { 0.0 } else { flow_dia / n_cap_flow as f64 },
        t_sys,
        t_dia,
    };
    Ok(report)
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Piecewise-linear interpolation of segment-endpoint values onto query
/// positions along a branch path. Exact at endpoints; queries must stay
/// within the covered extent.
pub fn branch_interpolate(
    positions: &[f64],
    values: &[f64],
    queries: &[f64],
) -> Result<Vec<f64>, MetricsError> {
    if positions.len() < 2 || positions.len() != values.len() {
        return Err(MetricsError::NonMonotonic);
    }
    if positions.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(MetricsError::NonMonotonic);
    }
    let (low, high) = (positions[0], *positions.last().unwrap());
    let mut out = Vec::with_capacity(queries.len());
    for &q in queries {
        if !(low..=high).contains(&q) {
            return Err(MetricsError::OutOfRange { query: q, low, high });
        }
        let i = match positions.binary_search_by(|x| x.partial_cmp(&q).unwrap()) {
            Ok(i) => {
                out.push(values[i]);
                continue;
            }
            Err(i) => i,
        };
        let theta = (q - positions[i - 1]) / (positions[i] - positions[i - 1]);
        out.push(values[i - 1] * (1.0 - theta) + values[i] * theta);
    }
    Ok(out)
}

/// Resamples a cyclic cap series onto `n` uniform samples by periodic linear
/// interpolation. The explicit pre-step for comparing mismatched grids;
/// metrics never resample implicitly.
pub fn resample_cap(series: &CapSeries, n: usize) -> CapSeries {
    let resample = |v: &[f64]| -> Vec<f64> {
        let m = v.len();
        (0..n)
            .map(|i| {
                let x = i as f64 * m as f64 / n as f64;
                let j = x.floor() as usize;
                let theta = x - j as f64;
                let a = v[j % m];
                let b = v[(j + 1) % m];
                a * (1.0 - theta) + b * theta
            })
            .collect()
    };
    CapSeries {
        cap_id: series.cap_id.clone(),
        is_inlet: series.is_inlet,
        pressure: resample(&series.pressure),
        flow: resample(&series.flow),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn cap(id: &str, inlet: bool, pressure: Vec<f64>, flow: Vec<f64>) -> CapSeries {
        CapSeries { cap_id: id.into(), is_inlet: inlet, pressure, flow }
    }

    #[test]
    fn argmax_argmin_with_ties() {
        assert_eq!(systole_diastole_indices(&[0.0, 10.0, 2.0]), (1, 0));
        assert_eq!(systole_diastole_indices(&[5.0, 5.0, 5.0]), (0, 0));
        assert_eq!(systole_diastole_indices(&[3.0, 1.0, 4.0, 1.0]), (2, 1));
    }

    #[test]
    fn identical_series_give_zero_errors() {
        let reference = vec![
            cap("in", true, vec![9.0, 10.0, 8.0], vec![1.0, 5.0, 2.0]),
            cap("out", false, vec![7.0, 8.0, 6.0], vec![0.5, 4.0, 1.0]),
        ];
        let report = cap_errors(&reference, &reference).unwrap();
        assert_eq!(report.pressure_avg, 0.0);
        assert_eq!(report.flow_avg, 0.0);
        assert_eq!(report.pressure_max, 0.0);
        assert_eq!(report.flow_max, 0.0);
        assert_eq!(report.pressure_sys, 0.0);
        assert_eq!(report.flow_sys, 0.0);
        assert_eq!(report.pressure_dia, 0.0);
        assert_eq!(report.flow_dia, 0.0);
        assert_eq!((report.t_sys, report.t_dia), (1, 0));
    }

    #[test]
    fn pressure_hand_case() {
        // Single cap, P_ref = [1,2,3], P_test = [1,2,4]:
        // avg = 1/6, max = 3·(1/6) = 1/2.
        let reference = vec![cap("in", true, vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 0.0])];
        let test = vec![cap("in", true, vec![1.0, 2.0, 4.0], vec![0.0, 1.0, 0.0])];
        let report = cap_errors(&reference, &test).unwrap();
        assert_eq!(report.pressure_avg, 1.0 / 6.0);
        assert_eq!(report.pressure_max, 0.5);
        // No non-inlet caps: flow errors are zero by convention.
        assert_eq!(report.flow_avg, 0.0);
    }

    #[test]
    fn flow_hand_case() {
        // One non-inlet cap, Q_ref = [0,10,0], Q_test = [0,8,0]:
        // avg = (1/3)·(2/10) = 1/15, max = 2/10.
        let reference = vec![
            cap("in", true, vec![1.0, 1.0, 1.0], vec![0.0, 10.0, 0.0]),
            cap("out", false, vec![1.0, 1.0, 1.0], vec![0.0, 10.0, 0.0]),
        ];
        let test = vec![
            cap("in", true, vec![1.0, 1.0, 1.0], vec![0.0, 10.0, 0.0]),
            cap("out", false, vec![1.0, 1.0, 1.0], vec![0.0, 8.0, 0.0]),
        ];
        let report = cap_errors(&reference, &test).unwrap();
        assert_eq!(report.flow_avg, 1.0 / 15.0);
        assert_eq!(report.flow_max, 0.2);
        assert_eq!(report.flow_sys, 0.2);
        assert_eq!(report.flow_dia, 0.0);
    }

    #[test]
    fn inlet_flow_is_excluded() {
        let reference = vec![
            cap("in", true, vec![1.0, 1.0], vec![0.0, 10.0]),
            cap("out", false, vec![1.0, 1.0], vec![0.0, 5.0]),
        ];
        let mut test = reference.clone();
        test[0].flow = vec![100.0, -50.0];
        let report = cap_errors(&reference, &test).unwrap();
        assert_eq!(report.flow_avg, 0.0);
        assert_eq!(report.flow_max, 0.0);
    }

    #[test]
    fn instant_errors_bounded_by_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.gen_range(3..20);
            let mk = |rng: &mut ChaCha8Rng, base: f64| -> Vec<f64> {
                (0..n).map(|_| base + rng.gen_range(0.0..10.0)).collect()
            };
            let reference = vec![
                cap("in", true, mk(&mut rng, 50.0), mk(&mut rng, 10.0)),
                cap("a", false, mk(&mut rng, 40.0), mk(&mut rng, 5.0)),
                cap("b", false, mk(&mut rng, 60.0), mk(&mut rng, 2.0)),
            ];
            let test: Vec<CapSeries> = reference
                .iter()
                .map(|c| CapSeries {
                    cap_id: c.cap_id.clone(),
                    is_inlet: c.is_inlet,
                    pressure: c.pressure.iter().map(|p| p + rng.gen_range(-5.0..5.0)).collect(),
                    flow: c.flow.iter().map(|q| q + rng.gen_range(-2.0..2.0)).collect(),
                })
                .collect();
            let report = cap_errors(&reference, &test).unwrap();
            assert!(report.pressure_sys <= report.pressure_max + 1e-15);
            assert!(report.pressure_dia <= report.pressure_max + 1e-15);
            assert!(report.flow_sys <= report.flow_max + 1e-15);
            assert!(report.flow_dia <= report.flow_max + 1e-15);
        }
    }

    #[test]
    fn uniform_rotation_leaves_errors_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 12;
        let mk = |rng: &mut ChaCha8Rng, base: f64| -> Vec<f64> {
            (0..n).map(|_| base + rng.gen_range(0.0..10.0)).collect()
        };
        let reference = vec![
            cap("in", true, mk(&mut rng, 50.0), mk(&mut rng, 10.0)),
            cap("a", false, mk(&mut rng, 40.0), mk(&mut rng, 5.0)),
        ];
        let test: Vec<CapSeries> = reference
            .iter()
            .map(|c| CapSeries {
                cap_id: c.cap_id.clone(),
                is_inlet: c.is_inlet,
                pressure: c.pressure.iter().map(|p| p + rng.gen_range(-3.0..3.0)).collect(),
                flow: c.flow.iter().map(|q| q + rng.gen_range(-1.0..1.0)).collect(),
            })
            .collect();
        let base = cap_errors(&reference, &test).unwrap();
        let rotate = |v: &[f64], k: usize| -> Vec<f64> {
            (0..v.len()).map(|i| v[(i + k) % v.len()]).collect()
        };
        for k in [1usize, 3, 7] {
            let rot = |caps: &[CapSeries]| -> Vec<CapSeries> {
                caps.iter()
                    .map(|c| CapSeries {
                        cap_id: c.cap_id.clone(),
                        is_inlet: c.is_inlet,
                        pressure: rotate(&c.pressure, k),
                        flow: rotate(&c.flow, k),
                    })
                    .collect()
            };
            let report = cap_errors(&rot(&reference), &rot(&test)).unwrap();
            assert_relative_eq!(report.pressure_avg, base.pressure_avg, epsilon = 1e-13);
            assert_relative_eq!(report.pressure_max, base.pressure_max, epsilon = 1e-13);
            assert_relative_eq!(report.flow_avg, base.flow_avg, epsilon = 1e-13);
            assert_relative_eq!(report.flow_max, base.flow_max, epsilon = 1e-13);
            assert_relative_eq!(report.pressure_sys, base.pressure_sys, epsilon = 1e-13);
            assert_relative_eq!(report.flow_dia, base.flow_dia, epsilon = 1e-13);
        }
    }

    #[test]
    fn mismatched_caps_and_zero_amplitude_are_reported() {
        let reference = vec![cap("in", true, vec![1.0, 1.0], vec![0.0, 1.0])];
        let test = vec![cap("other", true, vec![1.0, 1.0], vec![0.0, 1.0])];
        assert!(matches!(cap_errors(&reference, &test), Err(MetricsError::MismatchedCaps(_))));

        let reference = vec![
            cap("in", true, vec![1.0, 1.0], vec![0.0, 1.0]),
            cap("flat", false, vec![1.0, 1.0], vec![2.0, 2.0]),
        ];
        assert!(matches!(
            cap_errors(&reference, &reference),
            Err(MetricsError::ZeroFlowAmplitude(_))
        ));
    }

    #[test]
    fn branch_interpolation_reference_cases() {
        let out = branch_interpolate(&[0.0, 10.0], &[100.0, 80.0], &[5.0]).unwrap();
        assert_eq!(out, vec![90.0]);
        let out = branch_interpolate(&[0.0, 10.0], &[100.0, 80.0], &[10.0, 0.0]).unwrap();
        assert_eq!(out, vec![80.0, 100.0]);
        let out = branch_interpolate(&[0.0, 4.0, 10.0], &[100.0, 90.0, 60.0], &[7.0]).unwrap();
        assert_eq!(out, vec![75.0]);
    }

    #[test]
    fn branch_interpolation_rejects_out_of_range() {
        let err = branch_interpolate(&[0.0, 1.0], &[1.0, 2.0], &[1.5]).unwrap_err();
        assert!(matches!(err, MetricsError::OutOfRange { .. }));
    }

    #[test]
    fn resampling_preserves_identity_grids() {
        let c = cap("x", false, vec![1.0, 2.0, 3.0, 4.0], vec![0.0, 1.0, 0.0, -1.0]);
        let same = resample_cap(&c, 4);
        assert_eq!(same.pressure, c.pressure);
        assert_eq!(same.flow, c.flow);
    }
}
