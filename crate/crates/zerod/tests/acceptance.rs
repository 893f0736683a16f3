//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (run with `--nocapture` to see them). Tolerances are fixed
//! here, not tuned at runtime.

use std::time::Instant;
use zerod::commands::{cmd_run, RunArgs};
use zerod::elements::{PressureBcParams, VesselParams, WindkesselParams};
use zerod::integrator::{assemble, check_periodicity, run_simulation, IntegratorParams};
use zerod::io::{read_manifest, write_model, SimulationParameters};
use zerod::metrics::{cap_errors, CapSeries};
use zerod::model::{DofMap, ElementKind, SolutionState, TimeSeries};
use zerod::rom::{detect_stenosis, optimal_breakpoints, stenosis_candidates, BranchProfile};
use zerod::synth;

fn pass(n: usize, what: &str) {
    println!("criterion {n} ({what}): PASS");
}

fn rcr(rp: f64, c: f64, rd: f64, pd: f64) -> ElementKind {
    ElementKind::WindkesselBc(WindkesselParams {
        resistance_proximal: rp,
        capacitance: c,
        resistance_distal: rd,
        pressure_distal: pd,
    })
}

/// Step inflow into an RCR with a consistent initial state; returns the
/// final-time relative error of the internal pressure against the analytic
/// transient, plus the maximum relative error over the run.
fn rcr_transient_errors(dt: f64, rho: f64) -> (f64, f64) {
    let (rp, c, rd, pd, q0) = (100.0, 1e-4, 900.0, 10.0, 5.0);
    let tau = rd * c;
    let steps = (tau / dt).round() as usize;
    let net = synth::inflow_into_bc(TimeSeries::constant(q0, 100.0 * tau), rcr(rp, c, rd, pd));
    let params = IntegratorParams {
        spectral_radius: rho,
        dt,
        steps_per_cycle: steps,
        newton_abs_tol: 1e-13,
        ..IntegratorParams::default()
    };
    let initial = SolutionState {
        t: 0.0,
        y: vec![pd + rp * q0, q0, pd],
        ydot: vec![q0 / c, 0.0, q0 / c],
    };
    let results = run_simulation(&net, &params, 1, Some(initial)).unwrap();
    let mut max_rel = 0.0f64;
    let mut final_rel = 0.0;
    for (i, &t) in results.times.iter().enumerate() {
        let exact = pd + q0 * rd * (1.0 - (-t / tau).exp());
        let p_c = results.pressures[0][i] - rp * q0;
        let rel = (p_c - exact).abs() / exact.abs();
        max_rel = max_rel.max(rel);
        final_rel = rel;
    }
    (final_rel, max_rel)
}

#[test]
fn criterion_01_rcr_transient_accuracy() {
    let tau: f64 = 900.0 * 1e-4;
    let start = Instant::now();
    let (_, max_rel) = rcr_transient_errors(tau / 1000.0, 0.0);
    let elapsed = start.elapsed().as_secs_f64();
    assert!(max_rel < 1e-3, "max relative error {max_rel}");
    assert!(elapsed < 1.0, "runtime {elapsed} s");
    pass(1, "analytic RCR transient < 0.1% in < 1 s");
}

#[test]
fn criterion_02_second_order_convergence() {
    let tau: f64 = 900.0 * 1e-4;
    for rho in [0.0, 0.5, 1.0] {
        let (coarse, _) = rcr_transient_errors(tau / 1000.0, rho);
        let (fine, _) = rcr_transient_errors(tau / 2000.0, rho);
        let ratio = coarse / fine;
        assert!(
            (3.5..=4.5).contains(&ratio),
            "rho_inf = {rho}: error ratio {ratio} outside [3.5, 4.5]"
        );
    }
    pass(2, "halving dt reduces error 3.5-4.5x for rho_inf 0, 0.5, 1");
}

#[test]
fn criterion_03_kirchhoff_flow_split() {
    let net = synth::flow_split(TimeSeries::constant(4.0, 1.0), 100.0, 300.0);
    let params = IntegratorParams { dt: 1e-3, steps_per_cycle: 200, ..IntegratorParams::default() };
    let results = run_simulation(&net, &params, 1, None).unwrap();
    let last = results.times.len() - 1;
    let check = |value: f64, expected: f64, what: &str| {
        let rel = (value - expected).abs() / expected.abs();
        assert!(rel < 1e-8, "{what}: {value} vs {expected} (rel {rel})");
    };
    check(results.flows[1][last], 3.0, "Q1");
    check(results.flows[2][last], 1.0, "Q2");
    check(results.pressures[0][last], 300.0, "junction pressure");
    pass(3, "junction flow split matches hand Kirchhoff solution");
}

#[test]
fn criterion_04_stenosis_element_exactness() {
    let density = 1.06;
    let ks = zerod::stenosis_coefficient(3.0, 1.0, density).unwrap();
    let r = 50.0;
    for q in [-20.0, 0.0, 20.0] {
        let net = synth::single_vessel(
            TimeSeries::constant(q, 1.0),
            VesselParams { resistance: r, stenosis_coefficient: ks, ..VesselParams::default() },
            ElementKind::PressureBc(PressureBcParams { pressure: 0.0 }),
        );
        let params = IntegratorParams {
            dt: 1e-3,
            steps_per_cycle: 50,
            newton_abs_tol: 1e-12,
            ..IntegratorParams::default()
        };
        let results = run_simulation(&net, &params, 1, None).unwrap();
        let last = results.times.len() - 1;
        let drop = results.pressures[0][last] - results.pressures[1][last];
        let expected = (r + ks * q.abs()) * q;
        if expected == 0.0 {
            assert!(drop.abs() < 1e-10, "zero-flow drop {drop}");
        } else {
            let rel = (drop - expected).abs() / expected.abs();
            assert!(rel < 1e-10, "Q = {q}: drop {drop} vs {expected} (rel {rel})");
        }
    }
    pass(4, "steady stenosis pressure drop equals (R + Ks|Q|)Q to 1e-10");
}

#[test]
fn criterion_05_conservation_on_branching_tree() {
    // Three junctions: two levels of branching.
    let net = synth::branching_tree(synth::pulsatile_inflow(1.0, 60.0, 6.0, 32), 2, 2, 0.5);
    assert_eq!(
        net.elements.iter().filter(|e| matches!(e.kind, ElementKind::Junction)).count(),
        3
    );
    let params = IntegratorParams { dt: 1e-3, steps_per_cycle: 1000, ..IntegratorParams::default() };
    let results = run_simulation(&net, &params, 5, None).unwrap();

    let mut max_mass = 0.0f64;
    let mut max_spread = 0.0f64;
    for e in &net.elements {
        if !matches!(e.kind, ElementKind::Junction) {
            continue;
        }
        for i in 0..results.times.len() {
            let inflow: f64 = e.inlets.iter().map(|w| results.flows[w.0][i]).sum();
            let outflow: f64 = e.outlets.iter().map(|w| results.flows[w.0][i]).sum();
            max_mass = max_mass.max((inflow - outflow).abs());
            let p0 = results.pressures[e.inlets[0].0][i];
            for w in e.ports() {
                max_spread = max_spread.max((results.pressures[w.0][i] - p0).abs());
            }
        }
    }
    assert!(max_mass < 1e-6, "max junction mass defect {max_mass}");
    assert!(max_spread < 1e-6, "max junction pressure spread {max_spread}");
    pass(5, "junction mass defect and pressure spread < 1e-6 over 5 pulsatile cycles");
}

#[test]
fn criterion_06_stenosis_detection_on_planted_narrowings() {
    let mut rng = synth::SplitMix::new(2024);
    for case in 0..50 {
        let n = 41 + (rng.next() % 30) as usize * 2; // odd sample counts
        let length = 4.0 + 6.0 * rng.uniform();
        let base = 2.0 + 3.0 * rng.uniform();
        let depth = 0.2 + 0.6 * rng.uniform();
        // Center on a grid point so the sampled minimum equals the planted one.
        let center_idx = n / 4 + (rng.next() as usize % (n / 2));
        let width_idx = 4 + (rng.next() % 6) as usize;
        let ds = length / (n - 1) as f64;
        let center = center_idx as f64 * ds;
        let width = width_idx as f64 * ds;

        let samples: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let s = i as f64 * ds;
                let x = (s - center).abs();
                let bump = if x < width {
                    0.5 * (1.0 + (std::f64::consts::PI * x / width).cos())
                } else {
                    0.0
                };
                (s, base * (1.0 - depth * bump))
            })
            .collect();
        let profile = BranchProfile::new(case, samples).unwrap();

        let candidates = stenosis_candidates(&profile);
        let best = candidates
            .iter()
            .max_by(|a, b| a.ratio.partial_cmp(&b.ratio).unwrap())
            .expect("planted narrowing detected");
        assert!(
            best.min_index.abs_diff(center_idx) <= 1,
            "case {case}: detected at {} vs planted {center_idx}",
            best.min_index
        );
        // Noiseless profile: the ratio is exact.
        let expected = base / (base * (1.0 - depth));
        assert_eq!(best.ratio, expected, "case {case}");

        let segmentation = detect_stenosis(&profile, 1.1);
        let stenosis = segmentation.stenosis().expect("stenosis segment emitted");
        assert_eq!(stenosis.area_stenosis, base * (1.0 - depth));
    }

    // Multi-dip profiles select the largest ratio.
    for case in 0..10 {
        let base = 4.0;
        let shallow = 0.25 + 0.1 * (case as f64 / 10.0);
        let deep = shallow + 0.3;
        let mut areas = vec![base; 61];
        for (i, area) in areas.iter_mut().enumerate() {
            let bump = |c: usize, w: usize, d: f64, i: usize| -> f64 {
                let x = (i as f64 - c as f64).abs() / w as f64;
                if x < 1.0 {
                    d * 0.5 * (1.0 + (std::f64::consts::PI * x).cos())
                } else {
                    0.0
                }
            };
            *area = base * (1.0 - bump(15, 5, shallow, i) - bump(45, 5, deep, i));
        }
        let samples: Vec<(f64, f64)> = areas.iter().enumerate().map(|(i, &a)| (i as f64 * 0.1, a)).collect();
        let profile = BranchProfile::new(case, samples).unwrap();
        let segmentation = detect_stenosis(&profile, 1.1);
        let stenosis = segmentation.stenosis().expect("stenosis found");
        assert_eq!(stenosis.area_stenosis, base * (1.0 - deep), "case {case}: picked the wrong dip");
    }
    pass(6, "planted narrowings located within one sample with exact ratios");
}

#[test]
fn criterion_07_breakpoints_match_exhaustive_enumeration() {
    let mut rng = synth::SplitMix::new(7);
    let mut checked = 0usize;
    for _ in 0..120 {
        let m = 4 + (rng.next() % 9) as usize; // 4..=12 samples
        let areas: Vec<f64> = (0..m).map(|_| 0.5 + 5.0 * rng.uniform()).collect();
        let samples: Vec<(f64, f64)> = areas.iter().enumerate().map(|(i, &a)| (i as f64 * 0.5, a)).collect();
        let profile = BranchProfile::new(0, samples).unwrap();
        for n in 1..=4.min(m - 1) {
            let (bps, sse) = optimal_breakpoints(&profile, n).unwrap();
            let (oracle_bps, oracle_sse) = enumerate(profile.samples(), n);
            assert_eq!(sse, oracle_sse, "m = {m}, n = {n}");
            assert_eq!(bps, oracle_bps, "m = {m}, n = {n}");
            checked += 1;
        }
    }
    assert!(checked > 300);
    pass(7, "dynamic-programming breakpoints equal exhaustive enumeration exactly");
}

/// Brute-force oracle: every breakpoint subset in lexicographic order, with
/// segment costs accumulated right-to-left like the recursion under test.
fn enumerate(samples: &[(f64, f64)], n: usize) -> (Vec<usize>, f64) {
    fn sse(samples: &[(f64, f64)], a: usize, b: usize) -> f64 {
        let (sa, va) = samples[a];
        let (sb, vb) = samples[b];
        let mut acc = 0.0;
        for &(s, v) in &samples[a + 1..b] {
            let theta = (s - sa) / (sb - sa);
            let fit = va * (1.0 - theta) + vb * theta;
            acc += (v - fit) * (v - fit);
        }
        acc
    }
    let last = samples.len() - 1;
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut combo: Vec<usize> = (1..n).collect();
    loop {
        let mut bounds = vec![0usize];
        bounds.extend_from_slice(&combo);
        bounds.push(last);
        let mut total = 0.0;
        for w in bounds.windows(2).rev() {
            total = sse(samples, w[0], w[1]) + total;
        }
        if best.as_ref().map_or(true, |(_, b)| total < *b) {
            best = Some((combo.clone(), total));
        }
        if n == 1 {
            break;
        }
        // Advance to the next combination.
        let k = combo.len();
        let mut i = k;
        let advanced = loop {
            if i == 0 {
                break false;
            }
            i -= 1;
            if combo[i] < last - (k - i) {
                combo[i] += 1;
                for j in i + 1..k {
                    combo[j] = combo[j - 1] + 1;
                }
                break true;
            }
        };
        if !advanced {
            break;
        }
    }
    best.unwrap()
}

#[test]
fn criterion_08_metrics_match_direct_summation_oracle() {
    // Hand cases reproduce exactly.
    let reference = vec![CapSeries {
        cap_id: "in".into(),
        is_inlet: true,
        pressure: vec![1.0, 2.0, 3.0],
        flow: vec![0.0, 1.0, 0.0],
    }];
    let test = vec![CapSeries {
        cap_id: "in".into(),
        is_inlet: true,
        pressure: vec![1.0, 2.0, 4.0],
        flow: vec![0.0, 1.0, 0.0],
    }];
    let report = cap_errors(&reference, &test).unwrap();
    assert_eq!(report.pressure_avg, 1.0 / 6.0);

    let reference = vec![
        CapSeries { cap_id: "in".into(), is_inlet: true, pressure: vec![1.0; 3], flow: vec![0.0, 10.0, 0.0] },
        CapSeries { cap_id: "out".into(), is_inlet: false, pressure: vec![1.0; 3], flow: vec![0.0, 10.0, 0.0] },
    ];
    let mut test = reference.clone();
    test[1].flow = vec![0.0, 8.0, 0.0];
    let report = cap_errors(&reference, &test).unwrap();
    assert_eq!(report.flow_avg, 1.0 / 15.0);

    // Random series against an independent direct-summation oracle.
    let mut rng = synth::SplitMix::new(88);
    for case in 0..100 {
        let n_t = 4 + (rng.next() % 40) as usize;
        let n_caps = 2 + (rng.next() % 4) as usize;
        let mut reference = Vec::new();
        let mut test = Vec::new();
        for k in 0..n_caps {
            let series = |rng: &mut synth::SplitMix, base: f64, spread: f64| -> Vec<f64> {
                (0..n_t).map(|_| base + spread * rng.uniform()).collect()
            };
            let p_ref = series(&mut rng, 50.0, 30.0);
            let q_ref = series(&mut rng, -5.0, 25.0);
            reference.push(CapSeries {
                cap_id: format!("cap{k}"),
                is_inlet: k == 0,
                pressure: p_ref.clone(),
                flow: q_ref.clone(),
            });
            test.push(CapSeries {
                cap_id: format!("cap{k}"),
                is_inlet: k == 0,
                pressure: p_ref.iter().map(|p| p + 4.0 * (rng.uniform() - 0.5)).collect(),
                flow: q_ref.iter().map(|q| q + 2.0 * (rng.uniform() - 0.5)).collect(),
            });
        }
        let report = cap_errors(&reference, &test).unwrap();
        let oracle = oracle_metrics(&reference, &test);
        let pairs = [
            (report.pressure_avg, oracle[0], "p_avg"),
            (report.flow_avg, oracle[1], "q_avg"),
            (report.pressure_max, oracle[2], "p_max"),
            (report.flow_max, oracle[3], "q_max"),
            (report.pressure_sys, oracle[4], "p_sys"),
            (report.flow_sys, oracle[5], "q_sys"),
            (report.pressure_dia, oracle[6], "p_dia"),
            (report.flow_dia, oracle[7], "q_dia"),
        ];
        for (got, want, what) in pairs {
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                "case {case} {what}: {got} vs {want}"
            );
        }
    }
    pass(8, "cap error metrics match the direct-summation oracle to 1e-12");
}

/// Literal transcription of the eight metric formulas as nested loops.
fn oracle_metrics(reference: &[CapSeries], test: &[CapSeries]) -> [f64; 8] {
    let n_t = reference[0].pressure.len();
    let inlet = reference.iter().position(|c| c.is_inlet).unwrap();
    let mut t_sys = 0;
    let mut t_dia = 0;
    for t in 0..n_t {
        if reference[inlet].flow[t] > reference[inlet].flow[t_sys] {
            t_sys = t;
        }
        if reference[inlet].flow[t] < reference[inlet].flow[t_dia] {
            t_dia = t;
        }
    }
    let n_cap = reference.len() as f64;
    let n_cap_q = reference.iter().filter(|c| !c.is_inlet).count() as f64;
    let mut out = [0.0f64; 8];
    for (r, s) in reference.iter().zip(test) {
        let scale: f64 = r.pressure.iter().sum();
        let mut sum = 0.0;
        let mut max = 0.0f64;
        for t in 0..n_t {
            let d = (s.pressure[t] - r.pressure[t]).abs();
            sum += d;
            if d > max {
                max = d;
            }
        }
        out[0] += sum / scale / n_cap;
        out[2] += n_t as f64 / n_cap * max / scale;
        out[4] += n_t as f64 / n_cap * (s.pressure[t_sys] - r.pressure[t_sys]).abs() / scale;
        out[6] += n_t as f64 / n_cap * (s.pressure[t_dia] - r.pressure[t_dia]).abs() / scale;
        if !r.is_inlet {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for t in 0..n_t {
                lo = lo.min(r.flow[t]);
                hi = hi.max(r.flow[t]);
            }
            let amp = hi - lo;
            let mut sum = 0.0;
            let mut max = 0.0f64;
            for t in 0..n_t {
                let d = (s.flow[t] - r.flow[t]).abs();
                sum += d;
                if d > max {
                    max = d;
                }
            }
            out[1] += sum / amp / (n_cap_q * n_t as f64);
            out[3] += max / amp / n_cap_q;
            out[5] += (s.flow[t_sys] - r.flow[t_sys]).abs() / amp / n_cap_q;
            out[7] += (s.flow[t_dia] - r.flow[t_dia]).abs() / amp / n_cap_q;
        }
    }
    out
}

#[test]
fn criterion_09_periodicity_flags_first_converged_cycle_pair() {
    // Slow RCR (tau = 1.8 s against a 1 s cycle) decays geometrically.
    let net = synth::inflow_into_bc(
        synth::pulsatile_inflow(1.0, 40.0, 4.0, 32),
        rcr(100.0, 2e-3, 900.0, 5.0 * 1333.22),
    );
    let params = IntegratorParams { dt: 2e-3, steps_per_cycle: 500, ..IntegratorParams::default() };
    let cycles = 14;
    let results = run_simulation(&net, &params, cycles, None).unwrap();

    // Hand-computed cycle means straight from the stored samples.
    let spc = params.steps_per_cycle;
    let means: Vec<f64> = (0..cycles)
        .map(|c| {
            let mut sum = 0.0;
            for i in (c * spc + 1)..=((c + 1) * spc) {
                sum += results.pressures[0][i];
            }
            sum / spc as f64
        })
        .collect();
    let first_converged_pair = (1..cycles)
        .find(|&c| ((means[c] - means[c - 1]) / means[c - 1]).abs() < 0.01)
        .expect("transient decays within the run");
    assert!(first_converged_pair > 1, "transient too fast to be informative");

    for upto in 2..=cycles {
        let report = check_periodicity(&results.truncated(upto), 0.01).unwrap();
        let expected = upto - 1 >= first_converged_pair;
        assert_eq!(
            report.converged,
            expected,
            "cycles = {upto}: flag {} but first converged pair is {first_converged_pair}",
            report.converged
        );
    }
    pass(9, "periodicity flag trips exactly at the first sub-1% cycle pair");
}

#[test]
fn criterion_10_runtime_envelope_100_elements() {
    let net = synth::branching_tree(synth::pulsatile_inflow(1.0, 70.0, 7.0, 32), 1, 32, 0.4);
    assert_eq!(net.elements.len(), 100, "envelope network must have 100 elements");

    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("model.json");
    let sim = SimulationParameters {
        number_of_cardiac_cycles: 10,
        number_of_time_pts_per_cardiac_cycle: 1000,
        ..SimulationParameters::default()
    };
    write_model(&model_path, &net, &sim).unwrap();

    let outcome = cmd_run(&RunArgs::new(&model_path, dir.path().join("run"))).unwrap();
    let manifest = read_manifest(&outcome.manifest_path).unwrap();
    assert!(manifest.converged);
    assert_eq!(manifest.cycles * manifest.steps_per_cycle, 10_000);
    assert!(
        manifest.wall_clock_seconds <= 50.0,
        "10k steps on 100 elements took {} s",
        manifest.wall_clock_seconds
    );
    pass(10, "100-element network, 10k steps, single thread within 50 s");
}

#[test]
fn criterion_11_global_tangent_matches_finite_differences() {
    let nets = vec![
        synth::branching_tree(synth::pulsatile_inflow(1.0, 50.0, 5.0, 16), 1, 2, 0.8),
        synth::single_vessel(
            synth::pulsatile_inflow(1.0, 30.0, 3.0, 16),
            VesselParams { resistance: 40.0, capacitance: 2e-5, inductance: 1.0, stenosis_coefficient: 0.6 },
            ElementKind::CoronaryBc(zerod::CoronaryParams {
                resistance_arterial: 100.0,
                resistance_micro: 50.0,
                resistance_venous: 20.0,
                capacitance_arterial: 1e-5,
                capacitance_intramyocardial: 2e-5,
                pressure_venous: 10.0,
                intramyocardial_pressure: TimeSeries::new(vec![0.0, 0.4, 1.0], vec![0.0, 2e4, 0.0]).unwrap(),
                arterial_cap_reference: Default::default(),
            }),
        ),
    ];
    let params = IntegratorParams { spectral_radius: 0.5, dt: 1e-3, ..IntegratorParams::default() };
    let factor = params.time_factor();
    let mut rng = synth::SplitMix::new(11);
    let mut states_checked = 0;

    for net in &nets {
        let dofs = DofMap::build(net).unwrap();
        let n = dofs.total_dofs();
        for _ in 0..10 {
            // Flows away from the |Q| kink, magnitudes spread over decades.
            let y: Vec<f64> = (0..n)
                .map(|_| {
                    let sign = if rng.next() % 2 == 0 { 1.0 } else { -1.0 };
                    sign * (0.5 + 1.5 * rng.uniform())
                })
                .collect();
            let ydot: Vec<f64> = (0..n).map(|_| 2.0 * (rng.uniform() - 0.5)).collect();
            let t = rng.uniform();
            let sys = assemble(net, &dofs, &y, &ydot, t, factor).unwrap();
            let dense = sys.tangent.to_dense();

            let mut frob_diff = 0.0;
            let mut frob = 0.0;
            for j in 0..n {
                let h = 1e-6 * y[j].abs().max(1.0);
                let mut yp = y.clone();
                let mut ym = y.clone();
                let mut ydp = ydot.clone();
                let mut ydm = ydot.clone();
                yp[j] += h;
                ym[j] -= h;
                // ẏ moves with y through the corrector coupling.
                ydp[j] += factor * h;
                ydm[j] -= factor * h;
                let rp = assemble(net, &dofs, &yp, &ydp, t, factor).unwrap().residual;
                let rm = assemble(net, &dofs, &ym, &ydm, t, factor).unwrap().residual;
                for i in 0..n {
                    let fd = (rp[i] - rm[i]) / (2.0 * h);
                    let d = fd - dense[i][j];
                    frob_diff += d * d;
                    frob += dense[i][j] * dense[i][j];
                }
            }
            let rel = frob_diff.sqrt() / frob.sqrt();
            assert!(rel < 1e-6, "relative tangent mismatch {rel}");
            states_checked += 1;
        }
    }
    assert_eq!(states_checked, 20);
    pass(11, "assembled tangent matches central differences on 20 random states");
}
