use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix};

use eprsim_core::cavity::*;
use eprsim_core::geo::*;
use eprsim_core::network::*;
use eprsim_core::optimize::*;
use eprsim_core::squeezer::*;
use eprsim_core::twophoton::*;
use eprsim_core::{C64, SPEED_OF_LIGHT};

fn to_nalgebra(m: &SpectralDensityMatrix) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(m.dim(), m.dim(), |i, j| {
        let z = m.get(i, j);
        Complex::new(z.re, z.im)
    })
}

#[test]
fn epr_source_eigenvalues_are_squeezed_and_antisqueezed() {
    for r in [0.0, 0.3, 0.9, 1.5] {
        for theta_s in [0.0, 0.7, PI / 2.0] {
            let s = epr_source_spectral_matrix(&SqueezerSpec::new(r, theta_s, AngularFrequency::ZERO).unwrap());
            let mut ev: Vec<f64> = to_nalgebra(&s).symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            let (lo, hi) = ((-2.0 * r).exp(), (2.0 * r).exp());
            for (k, want) in [lo, lo, hi, hi].iter().enumerate() {
                assert!((ev[k] - want).abs() < 1e-12 * want.max(1.0), "r={r}: {ev:?}");
            }
        }
    }
}

/// Schur complement of the idler block, computed with nalgebra.
#[test]
fn conditional_variance_matches_schur_complement() {
    let cfg = GeoConfig {
        losses: LossBudget {
            input_loss: 0.05,
            output_loss: 0.08,
            internal_symmetric: 0.002,
            internal_asymmetric: 0.001,
        },
        schnupp_ls: 0.05,
        ..GeoConfig::default()
    };
    let model = GeoModel::new(&cfg).unwrap();
    let delta = cfg.epr_delta().unwrap();
    for f in [300.0, 2e3, 7e3] {
        let s = model.epr_covariance(delta, AngularFrequency::from_hz(f)).unwrap();
        let m = to_nalgebra(&s).map(|z| z.re);
        for (theta, phi) in [(PI / 2.0, 0.3), (1.0, -2.0), (0.2, 2.9)] {
            let angles = HomodyneAngles::new(theta, phi);
            let a = nalgebra::DVector::from_row_slice(&angles.signal_projection());
            let b = nalgebra::DVector::from_row_slice(&angles.idler_projection());
            let (vaa, vab, vbb) = ((a.transpose() * &m * &a)[0], (a.transpose() * &m * &b)[0], (b.transpose() * &m * &b)[0]);
            let want = vaa - vab * vab / vbb;
            let got = conditional_variance(&s, &angles).v_cond;
            assert!((got - want).abs() < 1e-12 * want, "{got} vs {want}");
        }
    }
}

#[test]
fn cascaded_losses_combine_multiplicatively() {
    let (e1, e2) = (0.13, 0.31);
    let build = |losses: &[f64]| {
        let mut net = OpticalNetwork::new();
        let a = net.add("A", ComponentKind::Space { length: 3.0 }).unwrap();
        net.label_input("in", PortRef::new(a, 0)).unwrap();
        net.add_detector("out", PortRef::new(a, 1)).unwrap();
        for (k, e) in losses.iter().enumerate() {
            let port = net.input_port("in").unwrap();
            net = net.attach_loss(&format!("L{k}"), port, *e).unwrap();
        }
        net
    };
    let channels = [DetectionChannel {
        detector: "out".into(),
        band: AngularFrequency::ZERO,
        lo_reference: 0.0,
    }];
    let src = single_mode_squeezed(1.2, 0.4, vec!["q1".into(), "q2".into()]);
    let sources = [InputCovariance {
        input: "in".into(),
        bands: vec![AngularFrequency::ZERO],
        covariance: src,
    }];
    let w = AngularFrequency(123.0);
    let two = build(&[e1, e2]).noise_covariance_at_detectors(&channels, &sources, w).unwrap();
    let one = build(&[1.0 - (1.0 - e1) * (1.0 - e2)])
        .noise_covariance_at_detectors(&channels, &sources, w)
        .unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert!((two.get(i, j) - one.get(i, j)).norm() < 1e-12);
        }
    }
}

#[test]
fn fabry_perot_buildup_matches_airy_formula() {
    let (t1, t2, length) = (0.01, 1e-4, 10.0);
    let mut net = OpticalNetwork::new();
    let m1 = net.add("M1", ComponentKind::Mirror { transmission: t1, loss: 0.0, tuning: 0.0 }).unwrap();
    let s = net.add("L", ComponentKind::Space { length }).unwrap();
    let m2 = net.add("M2", ComponentKind::Mirror { transmission: t2, loss: 0.0, tuning: 0.0 }).unwrap();
    net.connect(PortRef::new(m1, 0), PortRef::new(s, 0)).unwrap();
    net.connect(PortRef::new(s, 1), PortRef::new(m2, 0)).unwrap();
    let (r1, r2) = ((1.0 - t1).sqrt(), (1.0 - t2).sqrt());
    for f in [0.0, 1e3, 1e5, 3e6] {
        let w = AngularFrequency::from_hz(f);
        let sol = net.solve_fields(w, &[(PortRef::new(m1, 1), C64::new(1.0, 0.0))], &[]).unwrap();
        let phase = C64::from_polar(1.0, 2.0 * w.0 * length / SPEED_OF_LIGHT);
        let circulating = t1.sqrt() / (C64::new(1.0, 0.0) - phase * (r1 * r2));
        let want = circulating.norm_sqr();
        let got = sol.power(PortRef::new(m1, 0));
        assert!((got - want).abs() < 1e-9 * want, "f={f}: {got} vs {want}");
    }
}

#[test]
fn power_recycling_gain_matches_compound_mirror() {
    let cfg = GeoConfig::default();
    let model = GeoModel::new(&cfg).unwrap();
    // The tuned Michelson with perfect end mirrors reflects like a perfect mirror.
    let r = (1.0 - cfg.t_prm).sqrt();
    let gain = cfg.t_prm / (1.0 - r).powi(2);
    let (x, y) = model.arm_power().unwrap();
    let want = cfg.input_power * gain / 2.0;
    assert!((x - want).abs() < 1e-9 * want, "{x} vs {want}");
    assert!((y - want).abs() < 1e-9 * want);
    assert!(model.dark_port_power().unwrap() < 1e-20);
}

#[test]
fn arm_power_renormalisation_holds_target() {
    let cfg = GeoConfig {
        t_prm: 0.01,
        ..GeoConfig::default()
    };
    let scaled = cfg.with_arm_power(1000.0).unwrap();
    let (x, _) = GeoModel::new(&scaled).unwrap().arm_power().unwrap();
    assert!((x - 1000.0).abs() < 1e-9 * 1000.0);
    assert!(cfg.with_arm_power(0.0).is_err());
}

#[test]
fn asymmetric_loss_breaks_the_dark_fringe() {
    let lossy = GeoConfig {
        losses: LossBudget {
            internal_asymmetric: 0.01,
            ..LossBudget::default()
        },
        ..GeoConfig::default()
    };
    let p = GeoModel::new(&lossy).unwrap().dark_port_power().unwrap();
    assert!(p > 1e-6, "{p}");
    let symmetric = GeoConfig {
        losses: LossBudget {
            internal_symmetric: 0.01,
            ..LossBudget::default()
        },
        ..GeoConfig::default()
    };
    assert!(GeoModel::new(&symmetric).unwrap().dark_port_power().unwrap() < 1e-20);
}

/// Two neighbouring SRC resonances located by maximising the circulating
/// probe power are one free spectral range apart.
#[test]
fn src_free_spectral_range_from_probe() {
    let cfg = GeoConfig::default();
    let (net, ports) = build_geo(&cfg).unwrap();
    let src_power = |f: f64| {
        let sol = net
            .solve_fields(AngularFrequency::from_hz(f), &[(ports.dark_probe, C64::new(1.0, 0.0))], &[])
            .unwrap();
        sol.power(PortRef::new(ports.srm, 1))
    };
    let fsr = cfg.omega_src().hz();
    let dc = cfg.src_detuning.hz();
    let peak = |centre: f64| golden_section(|f| -src_power(f), centre - 300.0, centre + 300.0, 1e-6).0;
    let a = peak(-dc);
    let b = peak(fsr - dc);
    assert!((a + dc).abs() < 1.0, "{a}");
    assert!(((b - a) - fsr).abs() < 1e-6 * fsr, "{} vs {fsr}", b - a);
    assert!((fsr - SPEED_OF_LIGHT / (2.0 * cfg.src_length())).abs() < 1e-9);
}

#[test]
fn signal_response_peaks_at_the_detuning() {
    let cfg = GeoConfig::default();
    let model = GeoModel::new(&cfg).unwrap();
    let theta = cfg.homodyne.theta;
    let h = |f: f64| model.signal_response(AngularFrequency::from_hz(f), theta).unwrap().norm();
    let (f, _) = golden_section(|f| -h(f), 1e3, 3e3, 1e-3);
    let dc = cfg.src_detuning.hz();
    assert!((f - dc).abs() < 0.05 * dc, "peak at {f} Hz");
    assert!(h(f) > 3.0 * h(200.0));
}

#[test]
fn unsqueezed_epr_readout_is_the_vacuum_readout() {
    let cfg = GeoConfig {
        epr_squeezing_db: 0.0,
        schnupp_ls: 0.05,
        ..GeoConfig::default()
    };
    let model = GeoModel::new(&cfg).unwrap();
    let freqs = [100.0, 1e3, 2e3, 5e3, 3e4];
    let epr = Scenario::Epr(EprReadout {
        delta: cfg.epr_delta().unwrap(),
        phi_b: 0.4,
        gain: GainMode::OptimalPerFrequency,
    });
    let a = model.sensitivity(&epr, &freqs).unwrap();
    let b = model.sensitivity(&Scenario::NoSqueezing, &freqs).unwrap();
    for (x, y) in a.noise.iter().zip(&b.noise) {
        assert!((x - y).abs() < 1e-10, "{x} vs {y}");
    }
}

#[test]
fn optimised_readout_reaches_the_conditional_bound() {
    let cfg = GeoConfig::default();
    let model = GeoModel::new(&cfg).unwrap();
    let r = db_to_squeeze_factor(Decibel(cfg.epr_squeezing_db)).unwrap();
    let res = optimize_epr(&model, cfg.fsr_index, Objective::NoiseAtDetuning, &OptimizerSettings::default()).unwrap();
    let got = Decibel::from_power_ratio(res.noise_at_detuning).0;
    let bound = Decibel::from_power_ratio(1.0 / (2.0 * r).cosh()).0;
    assert!((got - bound).abs() < 0.1, "{got} vs {bound}");
    assert!((res.k_opt.abs() - (2.0 * r).tanh()).abs() < 1e-3);
}

#[test]
fn branch_choice_prefers_broadband_improvement() {
    let cfg = GeoConfig::default();
    let model = GeoModel::new(&cfg).unwrap();
    let (lower, upper) =
        optimize_epr_branches(&model, cfg.fsr_index, Objective::NoiseAtDetuning, &OptimizerSettings::default())
            .unwrap();
    assert_eq!(choose_branch(&model, &lower, &upper, (300.0, 2e4), 50).unwrap(), Branch::Lower);
    assert_eq!(choose_branch(&model, &upper, &lower, (300.0, 2e4), 50).unwrap(), Branch::Upper);
    assert_eq!(choose_branch(&model, &lower, &lower, (300.0, 2e4), 50).unwrap(), Branch::Lower);
}

#[test]
fn no_squeezing_has_no_optimum() {
    let cfg = GeoConfig {
        epr_squeezing_db: 0.0,
        ..GeoConfig::default()
    };
    let model = GeoModel::new(&cfg).unwrap();
    let settings = OptimizerSettings {
        delta_points: 21,
        phi_points: 24,
        ..OptimizerSettings::default()
    };
    let err = optimize_epr(&model, cfg.fsr_index, Objective::NoiseAtDetuning, &settings).unwrap_err();
    assert!(matches!(err, eprsim_core::Error::NoImprovement { .. }));
}

#[test]
fn symmetric_interferometer_keeps_probe_out_of_the_prc() {
    let cfg = GeoConfig::default();
    let f0 = cfg.fsr_index as f64 * cfg.omega_src().hz();
    let offsets: Vec<AngularFrequency> = (0..50).map(|i| AngularFrequency::from_hz(f0 - 5e3 + 200.0 * i as f64)).collect();
    let pts = coupled_cavity_response(&cfg, &offsets, &[0.0]).unwrap();
    assert!(pts.iter().all(|p| p.prc_power < 1e-20));
    assert!(pts.iter().any(|p| p.src_power > 10.0));
}

#[test]
fn omc_transmission_matches_ring_cavity_network() {
    let spec = OmcSpec::new(
        AngularFrequency::from_hz(1.4e6),
        AngularFrequency::from_hz(435e6),
        OmcMode::TransmitSignalReflectIdler,
    )
    .unwrap();
    let cfg = GeoConfig {
        separation: Separation::Cavity(spec),
        ..GeoConfig::default()
    };
    let delta = cfg.epr_delta().unwrap();
    let (net, _) = build_geo(&cfg).unwrap();
    // The vacuum dump of the first ring reaches HD_A only through transmission.
    let bare = build_geo(&GeoConfig::default()).unwrap().0;
    for f in [0.0, 2e3, 1e6] {
        let w = AngularFrequency::from_hz(f);
        let through = net.transfers(w).unwrap().get(SQUEEZER, HD_A).unwrap();
        let ideal = bare.transfers(w).unwrap().get(SQUEEZER, HD_A).unwrap();
        let (t, _) = omc_separation_transfer(&spec, Band::Signal, w, delta);
        assert!((through.norm() - ideal.norm() * t.norm()).abs() < 1e-9);
    }
}
