//! Local governing equations for every element kind.
//!
//! Each element contributes equations of the form
//! `E·ẏ_local + F·y_local + c = 0` over its local unknowns (wire pressure and
//! flow pairs in inlet-then-outlet order, followed by internal unknowns).
//! Alongside `E`, `F`, `c` an element provides the solution-derivative
//! contractions `dE = (∂E/∂y)·ẏ`, `dF = (∂F/∂y)·y` and `dc = ∂c/∂y` that the
//! Newton tangent needs. All functions here are pure.

use crate::model::{ElementKind, ElementSpec, TimeSeries};
use thiserror::Error;

/// Empirical correction factor of the expansion loss model.
pub const EXPANSION_LOSS_FACTOR: f64 = 1.52;

/// Vessel segment parameters.
///
/// The segment is serialized as resistor (Poiseuille + expansion loss) from
/// inlet to an internal node, compliance from the internal node to the zero
/// reference, and inductor from the internal node to the outlet. With zero
/// capacitance the internal node is eliminated.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VesselParams {
    /// Poiseuille resistance, dyn·s/cm⁵.
    pub resistance: f64,
    /// Compliance, cm⁵/dyn.
    pub capacitance: f64,
    /// Inertance, dyn·s²/cm⁵.
    pub inductance: f64,
    /// Expansion loss coefficient K_s, dyn·s²/cm⁸; the flow-dependent
    /// resistance is K_s·|Q|.
    pub stenosis_coefficient: f64,
}

/// Three-element Windkessel outlet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindkesselParams {
    pub resistance_proximal: f64,
    pub capacitance: f64,
    pub resistance_distal: f64,
    pub pressure_distal: f64,
}

/// Reference node of the arterial compliance in the coronary chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArterialCapReference {
    /// Compliance current C_a·Ṗ_a (referenced to ground).
    #[default]
    Ground,
    /// Compliance current C_a·(Ṗ_a − Ṗ_im(t)).
    Intramyocardial,
}

/// Coronary outlet chain: R_a, compliance C_a, R_am, compliance C_im
/// referenced to the prescribed intramyocardial pressure, R_v to a constant
/// venous pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct CoronaryParams {
    pub resistance_arterial: f64,
    pub resistance_micro: f64,
    pub resistance_venous: f64,
    pub capacitance_arterial: f64,
    pub capacitance_intramyocardial: f64,
    pub pressure_venous: f64,
    /// Prescribed intramyocardial pressure over one cycle, dyn/cm².
    pub intramyocardial_pressure: TimeSeries,
    pub arterial_cap_reference: ArterialCapReference,
}

/// Prescribed periodic inflow.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowBcParams {
    pub flow: TimeSeries,
}

/// Prescribed constant pressure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureBcParams {
    pub pressure: f64,
}

/// Resistance to a constant distal pressure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResistanceBcParams {
    pub resistance: f64,
    pub pressure_distal: f64,
}

/// Dense row-major matrix sized for local element systems.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl LocalMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    fn reset(&mut self, rows: usize, cols: usize) {
        self.rows = rows;
        self.cols = cols;
        self.data.clear();
        self.data.resize(rows * cols, 0.0);
    }
}

/// Local arrays of one element: `E·ẏ + F·y + c = 0` plus the tangent
/// contractions `dE`, `dF`, `dc`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSystem {
    pub n_eq: usize,
    pub n_local: usize,
    pub e: LocalMat,
    pub f: LocalMat,
    pub c: Vec<f64>,
    pub de: LocalMat,
    pub df: LocalMat,
    pub dc: LocalMat,
}

impl LocalSystem {
    pub fn sized(n_eq: usize, n_local: usize) -> Self {
        Self {
            n_eq,
            n_local,
            e: LocalMat::zeros(n_eq, n_local),
            f: LocalMat::zeros(n_eq, n_local),
            c: vec![0.0; n_eq],
            de: LocalMat::zeros(n_eq, n_local),
            df: LocalMat::zeros(n_eq, n_local),
            dc: LocalMat::zeros(n_eq, n_local),
        }
    }

    fn reset(&mut self, n_eq: usize, n_local: usize) {
        self.n_eq = n_eq;
        self.n_local = n_local;
        self.e.reset(n_eq, n_local);
        self.f.reset(n_eq, n_local);
        self.c.clear();
        self.c.resize(n_eq, 0.0);
        self.de.reset(n_eq, n_local);
        self.df.reset(n_eq, n_local);
        self.dc.reset(n_eq, n_local);
    }

    /// Residual `E·ẏ + F·y + c`.
    pub fn residual(&self, y_local: &[f64], ydot_local: &[f64]) -> Vec<f64> {
        let mut r = self.c.clone();
        for i in 0..self.n_eq {
            for j in 0..self.n_local {
                r[i] += self.e.get(i, j) * ydot_local[j] + self.f.get(i, j) * y_local[j];
            }
        }
        r
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElementError {
    #[error("element '{label}' expects {expected} local unknowns, got {got}")]
    DimensionMismatch { label: String, expected: usize, got: usize },
    #[error("areas must be positive (S0 = {s0}, Ss = {ss})")]
    NonPositiveArea { s0: f64, ss: f64 },
    #[error("stenosis area {ss} exceeds proximal area {s0}")]
    StenosisAreaExceedsProximal { s0: f64, ss: f64 },
}

/// Number of local unknowns of an element (ports ×2 plus internals).
pub fn local_dof_count(spec: &ElementSpec) -> usize {
    2 * spec.port_count() + spec.kind.internal_dof_count()
}

/// Evaluates the local arrays of one element at the given local state.
pub fn element_local_system(
    spec: &ElementSpec,
    y_local: &[f64],
    ydot_local: &[f64],
    t: f64,
) -> Result<LocalSystem, ElementError> {
    let mut sys = LocalSystem::sized(0, 0);
    fill_local_system(spec, y_local, ydot_local, t, &mut sys)?;
    Ok(sys)
}

/// Same as [`element_local_system`] but writes into reusable storage.
pub fn fill_local_system(
    spec: &ElementSpec,
    y_local: &[f64],
    ydot_local: &[f64],
    t: f64,
    sys: &mut LocalSystem,
) -> Result<(), ElementError> {
    let n_local = local_dof_count(spec);
    if y_local.len() != n_local || ydot_local.len() != n_local {
        return Err(ElementError::DimensionMismatch {
            label: spec.label.clone(),
            expected: n_local,
            got: y_local.len().min(ydot_local.len()),
        });
    }
    sys.reset(spec.equation_count(), n_local);

    match &spec.kind {
        ElementKind::Vessel(v) => fill_vessel(v, y_local, sys),
        ElementKind::Junction => fill_junction(spec, sys),
        ElementKind::FlowBc(p) => {
            // Q − Q̂(t) = 0
            sys.f.set(0, 1, 1.0);
            sys.c[0] = -p.flow.value_at(t);
        }
        ElementKind::PressureBc(p) => {
            // P − P̂ = 0
            sys.f.set(0, 0, 1.0);
            sys.c[0] = -p.pressure;
        }
        ElementKind::ResistanceBc(p) => {
            // P − R·Q − P_distal = 0
            sys.f.set(0, 0, 1.0);
            sys.f.set(0, 1, -p.resistance);
            sys.c[0] = -p.pressure_distal;
        }
        ElementKind::WindkesselBc(p) => {
            // Local unknowns: P, Q, P_c.
            // (1) P − Rp·Q − P_c = 0
            sys.f.set(0, 0, 1.0);
            sys.f.set(0, 1, -p.resistance_proximal);
            sys.f.set(0, 2, -1.0);
            // (2) C·Ṗ_c + (P_c − P_d)/Rd − Q = 0
            sys.e.set(1, 2, p.capacitance);
            sys.f.set(1, 1, -1.0);
            sys.f.set(1, 2, 1.0 / p.resistance_distal);
            sys.c[1] = -p.pressure_distal / p.resistance_distal;
        }
        ElementKind::CoronaryBc(p) => {
            // Local unknowns: P, Q, P_a, Q_am, P_v.
            // (1) P − P_a − Ra·Q = 0
            sys.f.set(0, 0, 1.0);
            sys.f.set(0, 1, -p.resistance_arterial);
            sys.f.set(0, 2, -1.0);
            // (2) Ca·Ṗ_a − Q + Q_am = 0 (optionally referenced to P_im)
            sys.e.set(1, 2, p.capacitance_arterial);
            sys.f.set(1, 1, -1.0);
            sys.f.set(1, 3, 1.0);
            if p.arterial_cap_reference == ArterialCapReference::Intramyocardial {
                sys.c[1] = -p.capacitance_arterial * p.intramyocardial_pressure.derivative_at(t);
            }
            // (3) P_a − P_v − Ram·Q_am = 0
            sys.f.set(2, 2, 1.0);
            sys.f.set(2, 3, -p.resistance_micro);
            sys.f.set(2, 4, -1.0);
            // (4) Cim·(Ṗ_v − Ṗ_im(t)) + (P_v − P_v,distal)/Rv − Q_am = 0
            sys.e.set(3, 4, p.capacitance_intramyocardial);
            sys.f.set(3, 3, -1.0);
            sys.f.set(3, 4, 1.0 / p.resistance_venous);
            sys.c[3] = -p.capacitance_intramyocardial * p.intramyocardial_pressure.derivative_at(t)
                - p.pressure_venous / p.resistance_venous;
        }
    }
    Ok(())
}

fn fill_vessel(v: &VesselParams, y_local: &[f64], sys: &mut LocalSystem) {
    // sign(0) = 0 keeps the Newton tangent defined at flow reversals; the
    // flow-dependent resistance K_s·|Q_in| then has tangent 2·K_s·|Q_in|.
    let q_in = y_local[1];
    let abs_q = q_in.abs();
    let r_total = v.resistance + v.stenosis_coefficient * abs_q;

    if v.capacitance > 0.0 {
        // Local unknowns: P_in, Q_in, P_out, Q_out, P_c.
        // (1) P_in − P_c − (R + K_s|Q_in|)·Q_in = 0
        sys.f.set(0, 0, 1.0);
        sys.f.set(0, 1, -r_total);
        sys.f.set(0, 4, -1.0);
        sys.df.set(0, 1, -v.stenosis_coefficient * abs_q);
        // (2) C·Ṗ_c − Q_in + Q_out = 0
        sys.e.set(1, 4, v.capacitance);
        sys.f.set(1, 1, -1.0);
        sys.f.set(1, 3, 1.0);
        // (3) P_c − P_out − L·Q̇_out = 0
        sys.e.set(2, 3, -v.inductance);
        sys.f.set(2, 2, -1.0);
        sys.f.set(2, 4, 1.0);
    } else {
        // Local unknowns: P_in, Q_in, P_out, Q_out.
        // (1) P_in − P_out − (R + K_s|Q_in|)·Q_in − L·Q̇_out = 0
        sys.f.set(0, 0, 1.0);
        sys.f.set(0, 1, -r_total);
        sys.f.set(0, 2, -1.0);
        sys.e.set(0, 3, -v.inductance);
        sys.df.set(0, 1, -v.stenosis_coefficient * abs_q);
        // (2) Q_in − Q_out = 0
        sys.f.set(1, 1, 1.0);
        sys.f.set(1, 3, -1.0);
    }
}

fn fill_junction(spec: &ElementSpec, sys: &mut LocalSystem) {
    let m = spec.port_count();
    // Pressure of the first inlet equals the pressure of every other port.
    for j in 1..m {
        sys.f.set(j - 1, 0, 1.0);
        sys.f.set(j - 1, 2 * j, -1.0);
    }
    // Mass conservation: Σ Q_in − Σ Q_out = 0.
    let n_in = spec.inlets.len();
    for j in 0..m {
        let sign = if j < n_in { 1.0 } else { -1.0 };
        sys.f.set(m - 1, 2 * j + 1, sign);
    }
}

/// Expansion loss coefficient K_s from the proximal area `s0` and the
/// narrowed area `ss`, so the flow-dependent resistance is K_s·|Q| and the
/// pressure loss K_s·|Q|·Q. Equal areas give zero (Poiseuille limit).
pub fn stenosis_coefficient(s0: f64, ss: f64, density: f64) -> Result<f64, ElementError> {
    if !(ss > 0.0) || !(s0 > 0.0) {
        return Err(ElementError::NonPositiveArea { s0, ss });
    }
    if ss > s0 {
        return Err(ElementError::StenosisAreaExceedsProximal { s0, ss });
    }
    let ratio = s0 / ss - 1.0;
    Ok(EXPANSION_LOSS_FACTOR * density / (2.0 * s0 * s0) * ratio * ratio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ElementId, WireId};
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn spec(kind: ElementKind, n_in: usize, n_out: usize) -> ElementSpec {
        let inlets = (0..n_in).map(WireId).collect();
        let outlets = (n_in..n_in + n_out).map(WireId).collect();
        ElementSpec { id: ElementId(0), label: "e".into(), kind, inlets, outlets }
    }

    fn vessel(r: f64, c: f64, l: f64, ks: f64) -> ElementSpec {
        spec(
            ElementKind::Vessel(VesselParams {
                resistance: r,
                capacitance: c,
                inductance: l,
                stenosis_coefficient: ks,
            }),
            1,
            1,
        )
    }

    #[test]
    fn resistor_matches_reference_arrays() {
        let e = vessel(7.5, 0.0, 0.0, 0.0);
        let sys = element_local_system(&e, &[0.0; 4], &[0.0; 4], 0.0).unwrap();
        assert_eq!(sys.f.data, vec![1.0, -7.5, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        assert!(sys.e.data.iter().all(|&v| v == 0.0));
        assert!(sys.c.iter().all(|&v| v == 0.0));
        assert!(sys.de.data.iter().all(|&v| v == 0.0));
        assert!(sys.df.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn junction_residual_vanishes_when_constraints_hold() {
        let e = spec(ElementKind::Junction, 1, 2);
        let y = [5.0, 4.0, 5.0, 3.0, 5.0, 1.0];
        let sys = element_local_system(&e, &y, &[0.0; 6], 0.0).unwrap();
        assert_eq!(sys.residual(&y, &[0.0; 6]), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn stenosis_vessel_steady_pressure_drop() {
        // R = 2, K_s = 0.5, Q = 3 → ΔP = (2 + 0.5·3)·3 = 10.5.
        let e = vessel(2.0, 0.0, 0.0, 0.5);
        let y = [10.5, 3.0, 0.0, 3.0];
        let sys = element_local_system(&e, &y, &[0.0; 4], 0.0).unwrap();
        let r = sys.residual(&y, &[0.0; 4]);
        assert_relative_eq!(r[0], 0.0, epsilon = 1e-14);
        assert_eq!(r[1], 0.0);
    }

    #[test]
    fn windkessel_steady_closure() {
        // Rp = 100, Rd = 900, Pd = 10, Q = 5 → P_c = 4510, P = 5010.
        let e = spec(
            ElementKind::WindkesselBc(WindkesselParams {
                resistance_proximal: 100.0,
                capacitance: 1e-4,
                resistance_distal: 900.0,
                pressure_distal: 10.0,
            }),
            1,
            0,
        );
        let y = [5010.0, 5.0, 4510.0];
        let sys = element_local_system(&e, &y, &[0.0; 3], 0.0).unwrap();
        let r = sys.residual(&y, &[0.0; 3]);
        assert_relative_eq!(r[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(r[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn coronary_steady_closure() {
        let params = CoronaryParams {
            resistance_arterial: 100.0,
            resistance_micro: 50.0,
            resistance_venous: 20.0,
            capacitance_arterial: 1e-4,
            capacitance_intramyocardial: 1e-5,
            pressure_venous: 8.0,
            intramyocardial_pressure: TimeSeries::constant(0.0, 1.0),
            arterial_cap_reference: ArterialCapReference::Ground,
        };
        let e = spec(ElementKind::CoronaryBc(params), 1, 0);
        // Steady: Q_am = Q, P_v = Pv + Rv·Q, P_a = P_v + Ram·Q, P = P_a + Ra·Q.
        let q = 3.0;
        let p_v = 8.0 + 20.0 * q;
        let p_a = p_v + 50.0 * q;
        let p = p_a + 100.0 * q;
        let y = [p, q, p_a, q, p_v];
        let sys = element_local_system(&e, &y, &[0.0; 5], 0.0).unwrap();
        for r in sys.residual(&y, &[0.0; 5]) {
            assert_relative_eq!(r, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn stenosis_coefficient_reference_values() {
        // Equal areas recover Poiseuille.
        assert_eq!(stenosis_coefficient(3.0, 3.0, 1.06).unwrap(), 0.0);
        // S0 = 3, Ss = 1, ρ = 1.06.
        let ks = stenosis_coefficient(3.0, 1.0, 1.06).unwrap();
        assert_eq!(ks, 1.52 * 1.06 / 18.0 * 4.0);
        assert_relative_eq!(ks, 0.358044, epsilon = 1e-6);
        assert_relative_eq!(ks * 20.0 * 20.0, 143.22, epsilon = 1e-2);
        assert_eq!(EXPANSION_LOSS_FACTOR, 1.52);
    }

    #[test]
    fn stenosis_coefficient_rejects_bad_areas() {
        assert!(matches!(
            stenosis_coefficient(3.0, 0.0, 1.06),
            Err(ElementError::NonPositiveArea { .. })
        ));
        assert!(matches!(
            stenosis_coefficient(1.0, 3.0, 1.06),
            Err(ElementError::StenosisAreaExceedsProximal { .. })
        ));
    }

    #[test]
    fn stenosis_loss_is_even_in_flow() {
        let e = vessel(0.0, 0.0, 0.0, 0.7);
        for q in [0.5, 2.0, 17.0] {
            let drop_fwd = drop_for_flow(&e, q);
            let drop_rev = drop_for_flow(&e, -q);
            assert_relative_eq!(drop_fwd, -drop_rev, epsilon = 1e-12);
            assert_relative_eq!(drop_fwd.abs(), 0.7 * q * q, epsilon = 1e-12);
        }
    }

    /// Pressure drop that zeroes equation (1) at the given flow.
    fn drop_for_flow(e: &ElementSpec, q: f64) -> f64 {
        // r = P_in − P_out − (R + Ks|Q|)Q with P_out = 0: solve for P_in.
        let y = [0.0, q, 0.0, q];
        let sys = element_local_system(e, &y, &[0.0; 4], 0.0).unwrap();
        let r = sys.residual(&y, &[0.0; 4]);
        -r[0]
    }

    #[test]
    fn linear_vessel_residual_is_homogeneous() {
        let e = vessel(3.0, 1e-4, 2.0, 0.0);
        let y = [4.0, 1.5, 2.0, 1.0, 3.0];
        let ydot = [0.5, 0.2, -0.1, 0.3, 0.4];
        let sys = element_local_system(&e, &y, &ydot, 0.0).unwrap();
        assert!(sys.c.iter().all(|&v| v == 0.0));
        let alpha = 2.5;
        let ys: Vec<f64> = y.iter().map(|v| v * alpha).collect();
        let yds: Vec<f64> = ydot.iter().map(|v| v * alpha).collect();
        let scaled_sys = element_local_system(&e, &ys, &yds, 0.0).unwrap();
        let r = sys.residual(&y, &ydot);
        let rs = scaled_sys.residual(&ys, &yds);
        for (a, b) in r.iter().zip(&rs) {
            assert_relative_eq!(*b, alpha * a, epsilon = 1e-12);
        }
    }

    #[test]
    fn junction_residual_invariant_under_outlet_permutation() {
        let e = spec(ElementKind::Junction, 1, 3);
        let y = [5.0, 6.0, 5.0, 1.0, 5.0, 2.0, 5.0, 3.0];
        let sys = element_local_system(&e, &y, &[0.0; 8], 0.0).unwrap();
        let r = sys.residual(&y, &[0.0; 8]);
        // Swap outlets 2 and 3 (local slots 2 and 3 among ports).
        let y_perm = [5.0, 6.0, 5.0, 1.0, 5.0, 3.0, 5.0, 2.0];
        let sys_perm = element_local_system(&e, &y_perm, &[0.0; 8], 0.0).unwrap();
        let r_perm = sys_perm.residual(&y_perm, &[0.0; 8]);
        let mut a = r.clone();
        let mut b = r_perm.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
    }

    /// Central finite differences of the residual must match the analytic
    /// tangent contractions for every kind.
    #[test]
    fn finite_difference_tangent_all_kinds() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let pim = TimeSeries::new(vec![0.0, 0.3, 0.8, 1.0], vec![0.0, 1e4, 2e3, 0.0]).unwrap();
        let kinds = vec![
            vessel(2.0, 0.0, 0.0, 0.5),
            vessel(2.0, 1e-4, 3.0, 0.5),
            vessel(5.0, 1e-4, 0.0, 0.0),
            spec(ElementKind::Junction, 2, 3),
            spec(ElementKind::FlowBc(FlowBcParams { flow: pim.clone() }), 0, 1),
            spec(ElementKind::PressureBc(PressureBcParams { pressure: 20.0 }), 1, 0),
            spec(
                ElementKind::ResistanceBc(ResistanceBcParams { resistance: 100.0, pressure_distal: 5.0 }),
                1,
                0,
            ),
            spec(
                ElementKind::WindkesselBc(WindkesselParams {
                    resistance_proximal: 100.0,
                    capacitance: 1e-4,
                    resistance_distal: 900.0,
                    pressure_distal: 10.0,
                }),
                1,
                0,
            ),
            spec(
                ElementKind::CoronaryBc(CoronaryParams {
                    resistance_arterial: 100.0,
                    resistance_micro: 50.0,
                    resistance_venous: 20.0,
                    capacitance_arterial: 1e-4,
                    capacitance_intramyocardial: 1e-5,
                    pressure_venous: 8.0,
                    intramyocardial_pressure: pim,
                    arterial_cap_reference: ArterialCapReference::Intramyocardial,
                }),
                1,
                0,
            ),
        ];

        for e in &kinds {
            let n = local_dof_count(e);
            for _ in 0..5 {
                // Keep flows away from the |Q| kink.
                let y: Vec<f64> = (0..n)
                    .map(|_| {
                        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                        sign * rng.gen_range(0.5..2.0)
                    })
                    .collect();
                let ydot: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let t = 0.37;
                let sys = element_local_system(e, &y, &ydot, t).unwrap();

                for j in 0..n {
                    let h = 1e-6 * y[j].abs().max(1.0);
                    let mut yp = y.clone();
                    let mut ym = y.clone();
                    yp[j] += h;
                    ym[j] -= h;
                    let sp = element_local_system(e, &yp, &ydot, t).unwrap();
                    let sm = element_local_system(e, &ym, &ydot, t).unwrap();
                    let rp = sp.residual(&yp, &ydot);
                    let rm = sm.residual(&ym, &ydot);
                    for i in 0..sys.n_eq {
                        let fd = (rp[i] - rm[i]) / (2.0 * h);
                        let analytic = sys.de.get(i, j)
                            + sys.df.get(i, j)
                            + sys.dc.get(i, j)
                            + sys.f.get(i, j);
                        let scale = analytic.abs().max(1.0);
                        assert!(
                            (fd - analytic).abs() <= 1e-6 * scale,
                            "{}: ∂r[{i}]/∂y[{j}] fd = {fd}, analytic = {analytic}",
                            e.kind.name()
                        );
                    }
                    // ∂r/∂ẏ must equal E.
                    let mut ydp = ydot.clone();
                    let mut ydm = ydot.clone();
                    ydp[j] += h;
                    ydm[j] -= h;
                    let rp = sys.residual(&y, &ydp);
                    let rm = sys.residual(&y, &ydm);
                    for i in 0..sys.n_eq {
                        let fd = (rp[i] - rm[i]) / (2.0 * h);
                        let analytic = sys.e.get(i, j);
                        assert!(
                            (fd - analytic).abs() <= 1e-6 * analytic.abs().max(1.0),
                            "{}: ∂r[{i}]/∂ẏ[{j}]",
                            e.kind.name()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let e = vessel(1.0, 0.0, 0.0, 0.0);
        let err = element_local_system(&e, &[0.0; 3], &[0.0; 3], 0.0).unwrap_err();
        assert!(matches!(err, ElementError::DimensionMismatch { expected: 4, got: 3, .. }));
    }
}
