//! Built-in desk-scale experiments, one per reproduced figure.

use splitrx::modem::{Scheme, SerMethod};

use crate::spec::{ConstellationSpec, Estimator, ExperimentKind, ExperimentSpec, Grid, MiEval, Sweep};

fn sweep(power: Grid) -> Sweep {
    Sweep {
        rho: None,
        power,
        k: vec![1],
        constellations: Vec::new(),
        sigma1_sq: vec![1.0],
        sigma2_sq: vec![1.0],
    }
}

fn qam(m: usize) -> ConstellationSpec {
    ConstellationSpec { scheme: Scheme::Qam, m }
}

fn spec(name: &str, figure: &str, kind: ExperimentKind, description: &str, budget: f64, seed: u64, sweep: Sweep, estimator: Estimator) -> ExperimentSpec {
    ExperimentSpec {
        name: name.into(),
        kind,
        figure: Some(figure.into()),
        description: description.into(),
        sweep,
        estimator,
        seed,
        output_path: None,
        runtime_budget_s: Some(budget),
    }
}

fn log_powers() -> Grid {
    Grid::Values(vec![
        1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1e3, 2e3, 5e3, 1e4, 1e5, 1e6,
    ])
}

/// Every built-in experiment.
pub fn list_experiments() -> Vec<ExperimentSpec> {
    let mc = |samples: u64, mi: Vec<MiEval>| Estimator {
        mi,
        samples,
        ..Estimator::default()
    };
    let formula = |mi: MiEval| Estimator {
        mi: vec![mi],
        ..Estimator::default()
    };
    let ser = |trials: u64, realizations: u64| Estimator {
        ser: SerMethod::ImportanceSampling,
        trials,
        realizations,
        ..Estimator::default()
    };

    vec![
        spec(
            "fig4",
            "Fig. 4",
            ExperimentKind::MiVsRho,
            "Histogram MI versus rho at P=10, K=1, unit noise",
            30.0,
            4,
            Sweep {
                rho: Some(Grid::range(0.0, 1.0, 0.01)),
                ..sweep(Grid::Values(vec![10.0]))
            },
            mc(500_000, vec![MiEval::MonteCarlo]),
        ),
        spec(
            "fig5",
            "Fig. 5",
            ExperimentKind::MiVsRho,
            "Histogram MI and the high-SNR approximation versus rho for P in {10, 100, 1000}",
            30.0,
            5,
            Sweep {
                rho: Some(Grid::range(0.0, 1.0, 0.05)),
                ..sweep(Grid::Values(vec![10.0, 100.0, 1000.0]))
            },
            mc(500_000, vec![MiEval::MonteCarlo, MiEval::FormulaEi]),
        ),
        spec(
            "fig7",
            "Fig. 7",
            ExperimentKind::OptRhoVsPower,
            "MI-optimal rho versus P from the histogram estimator, with the formula optimum",
            60.0,
            7,
            Sweep {
                rho: Some(Grid::range(0.02, 0.98, 0.02)),
                ..sweep(Grid::Values(vec![2.0, 5.0, 10.0, 20.0, 35.0, 50.0, 100.0, 200.0, 500.0, 1000.0]))
            },
            mc(200_000, vec![MiEval::MonteCarlo]),
        ),
        spec(
            "fig8",
            "Fig. 8",
            ExperimentKind::MiVsPower,
            "Splitting MI at rho=1/3 against the best conventional MI versus P, sigma2_sq in {0.1, 1, 10}",
            5.0,
            8,
            Sweep {
                rho: Some(Grid::Values(vec![1.0 / 3.0])),
                sigma2_sq: vec![0.1, 1.0, 10.0],
                ..sweep(log_powers())
            },
            formula(MiEval::FormulaEi),
        ),
        spec(
            "fig9",
            "Fig. 9",
            ExperimentKind::GainVsPower,
            "MI joint processing gain from the high-SNR approximation versus P",
            5.0,
            9,
            Sweep {
                rho: Some(Grid::range(0.0, 1.0, 0.001)),
                sigma2_sq: vec![0.1, 1.0, 10.0],
                ..sweep(log_powers())
            },
            formula(MiEval::FormulaEi),
        ),
        spec(
            "fig10",
            "Fig. 10",
            ExperimentKind::MultiAntennaMi,
            "Average MI over Rayleigh channels at P=100: optimal ratios, simplified receiver, rho=1/3",
            60.0,
            10,
            Sweep {
                k: (2..=10).collect(),
                ..sweep(Grid::Values(vec![100.0]))
            },
            Estimator {
                realizations: 1000,
                ..formula(MiEval::FormulaLog)
            },
        ),
        spec(
            "fig11",
            "Fig. 11",
            ExperimentKind::K1RatioVsK,
            "Average MI-optimal fraction of CD antennas of the simplified receiver versus K",
            10.0,
            11,
            Sweep {
                k: vec![2, 4, 8, 16, 24, 32, 40, 48, 64, 96, 128],
                ..sweep(Grid::Values(vec![100.0]))
            },
            Estimator {
                realizations: 10_000,
                ..Estimator::default()
            },
        ),
        spec(
            "fig13",
            "Fig. 13",
            ExperimentKind::DecisionRegions,
            "ML decision regions of 8-PAM, 36-QAM and 4-IM as half-spaces, P=10, sigma1_sq=2",
            2.0,
            13,
            Sweep {
                rho: Some(Grid::Values(vec![0.5])),
                constellations: vec![
                    ConstellationSpec { scheme: Scheme::Pam, m: 8 },
                    qam(36),
                    ConstellationSpec { scheme: Scheme::Im, m: 4 },
                ],
                sigma1_sq: vec![2.0],
                ..sweep(Grid::Values(vec![10.0]))
            },
            Estimator::default(),
        ),
        spec(
            "fig14",
            "Fig. 14",
            ExperimentKind::SerVsRho,
            "16- and 36-QAM SER versus rho by importance sampling, with the high-SNR approximation",
            60.0,
            14,
            Sweep {
                rho: Some(Grid::range(0.0, 1.0, 0.05)),
                constellations: vec![qam(16), qam(36)],
                ..sweep(Grid::Values(vec![50.0, 200.0]))
            },
            ser(200_000, 1),
        ),
        spec(
            "fig15",
            "Fig. 15",
            ExperimentKind::SerGainVsPower,
            "QAM SER joint processing gain versus P for sigma2_sq in {1, 1e-3}",
            60.0,
            15,
            Sweep {
                rho: Some(Grid::range(0.0, 1.0, 0.05)),
                constellations: vec![qam(16), qam(36)],
                sigma2_sq: vec![1.0, 1e-3],
                ..sweep(Grid::Values(vec![10.0, 20.0, 50.0, 100.0]))
            },
            ser(100_000, 1),
        ),
        spec(
            "fig16",
            "Fig. 16",
            ExperimentKind::K1VsK,
            "Average SER-optimal number of CD antennas for 16-QAM versus K, P in {2, 10, 200}",
            60.0,
            16,
            Sweep {
                k: vec![4, 8, 12, 16, 20, 24],
                constellations: vec![qam(16)],
                ..sweep(Grid::Values(vec![2.0, 10.0, 200.0]))
            },
            ser(20_480, 40),
        ),
    ]
}

/// Looks up a built-in by name.
pub fn builtin(name: &str) -> Option<ExperimentSpec> {
    list_experiments().into_iter().find(|s| s.name == name)
}
