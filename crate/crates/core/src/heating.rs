//! Ring of `N` rooms, each with a heater: model, certificate, set-point
//! schedules and published reference data for comparison reports.

use crate::decimal::{decs, Dec};
use crate::plant::{
    thermal_contraction, Dynamics, GasCertificate, InputGrid, KInfinityFn, NetworkModel, PlantError, ThermalParams,
};

pub fn params() -> ThermalParams {
    ThermalParams {
        alpha: Dec::new(45, 2),
        beta: Dec::new(45, 3),
        gamma: Dec::new(9, 2),
        t_ext: Dec::from_int(-1),
        t_heater: Dec::from_int(50),
    }
}

/// Heater inputs `0, 0.025, ..., 1`.
pub fn paper_input_grid() -> InputGrid {
    InputGrid { start: Dec::ZERO, step: Dec::new(25, 3), stop: Dec::ONE }
}

pub fn ring_model(n: usize, grid: &InputGrid) -> Result<NetworkModel, PlantError> {
    let set = grid.input_set(1)?;
    NetworkModel::new(vec![1; n], vec![set; n], Dynamics::ThermalRing(params()))
}

/// Contraction factor `A` of the default parameters.
pub fn contraction() -> Dec {
    let p = params();
    thermal_contraction(p.alpha, p.beta, p.gamma).expect("small decimals")
}

/// Sup-norm certificate with `alpha_lo = alpha_hi = sigma = id` and
/// `rho(s) = (1 - A) s`.
pub fn certificate(n: usize) -> GasCertificate {
    let margin = Dec::ONE.checked_sub(contraction()).expect("small decimals");
    GasCertificate {
        weights: vec![1.0; n],
        alpha_lo: KInfinityFn::identity(),
        alpha_hi: KInfinityFn::identity(),
        rho: KInfinityFn::Linear { c: margin.to_f64() },
        sigma: KInfinityFn::identity(),
    }
}

/// Room 1 column of the schedule, one entry per step of the period.
pub const ROOM1: [&str; 12] = ["19", "19", "19", "19", "19", "19", "19", "19", "19", "19", "19", "19"];
/// Column shared by rooms `2..N`.
pub const OTHERS: [&str; 12] = ["18", "18.5", "19", "19.5", "20", "20", "20", "19.5", "19", "18.5", "18.25", "18"];
/// Room 1 column of the alternate schedule, which raises room 1 to 20 at
/// steps 9 and 10.
pub const ROOM1_ALT: [&str; 12] = ["19", "19", "19", "19", "19", "19", "19", "19", "19", "20", "20", "19"];

fn word_from(room1: &[&str], others: &[&str], n: usize) -> Vec<Vec<Dec>> {
    let r1 = decs(room1).expect("literal");
    let ot = decs(others).expect("literal");
    r1.iter()
        .zip(&ot)
        .map(|(a, b)| std::iter::once(*a).chain(std::iter::repeat_n(*b, n - 1)).collect())
        .collect()
}

/// One period of the set-point schedule for `n` rooms.
pub fn schedule_word(n: usize) -> Vec<Vec<Dec>> {
    word_from(&ROOM1, &OTHERS, n)
}

pub fn alternate_word(n: usize) -> Vec<Vec<Dec>> {
    word_from(&ROOM1_ALT, &OTHERS, n)
}

/// Initial state at the first set-point.
pub fn center_preset(n: usize) -> Vec<f64> {
    let mut x = vec![18.0; n];
    x[0] = 19.0;
    x
}

/// Initial state at a corner of the initial region: room 1 at 19.5, its two
/// neighbors at 18.5, the rest at 17.5.
pub fn corner_preset(n: usize) -> Vec<f64> {
    let mut x = vec![17.5; n];
    x[0] = 19.5;
    x[1] = 18.5;
    x[n - 1] = 18.5;
    x
}

/// Published local controller table, rows in their printed order:
/// `(step label, room 1, rooms 2 and N, rooms 3..N-1)`.
pub const REFERENCE_CONTROLLERS: [(usize, &str, &str, &str); 12] = [
    (0, "0.65", "0.45", "0.6"),
    (1, "0.475", "0.55", "0.625"),
    (2, "0.325", "0.65", "0.65"),
    (3, "0.15", "0.75", "0.65"),
    (4, "0", "0.525", "0.35"),
    (5, "0", "0.525", "0.35"),
    (7, "0", "0.175", "0.025"),
    (8, "0.15", "0.1", "0"),
    (9, "0.325", "0", "0"),
    (6, "0.475", "0.075", "0.15"),
    (10, "0.55", "0.025", "0.15"),
    (11, "0.65", "0.15", "0.30"),
];

/// Published closed-loop trace from the corner preset:
/// `(step, room 1, rooms 2 and N, rooms 3..N-1)`.
pub const REFERENCE_TRACE: [(usize, f64, f64, f64); 12] = [
    (0, 19.5000, 18.5000, 17.5000),
    (1, 18.9788, 18.8462, 18.0125),
    (2, 18.7329, 19.2453, 18.5368),
    (3, 18.6496, 19.6773, 19.0709),
    (4, 18.6042, 20.1282, 19.5744),
    (5, 18.5992, 20.1021, 19.5924),
    (6, 18.6058, 20.0838, 19.6098),
    (7, 18.6176, 19.5475, 19.1325),
    (8, 18.6200, 19.0492, 18.6292),
    (9, 18.6440, 18.5357, 18.1385),
    (10, 18.6448, 18.2824, 17.8990),
    (11, 18.6431, 18.0186, 17.9080),
];

/// Plant config text for `n` rooms with the default parameters.
pub fn plant_config_toml(n: usize) -> String {
    format!(
        r#"components = {n}
sample_box = [0.0, 50.0]

[inputs]
start = "0"
step = "0.025"
stop = "1"

[dynamics]
kind = "thermal_ring"
alpha = "0.45"
beta = "0.045"
gamma = "0.09"
t_ext = "-1"
t_heater = "50"

[certificate]
weights = [1.0]
alpha_lo = {{ kind = "linear", c = 1.0 }}
alpha_hi = {{ kind = "linear", c = 1.0 }}
rho = {{ kind = "linear", c = 0.045 }}
sigma = {{ kind = "linear", c = 1.0 }}
"#
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::PlantConfig;

    #[test]
    fn schedule_shape() {
        let w = schedule_word(4);
        assert_eq!(w.len(), 12);
        assert_eq!(w[0], decs(&["19", "18", "18", "18"]).unwrap());
        assert_eq!(alternate_word(4)[10], decs(&["20", "18.25", "18.25", "18.25"]).unwrap());
    }

    #[test]
    fn contraction_value() {
        assert_eq!(contraction(), Dec::new(955, 3));
        assert_eq!(certificate(3).rho, KInfinityFn::Linear { c: 0.045 });
    }

    #[test]
    fn config_text_matches_builder() {
        let (m, c) = PlantConfig::from_toml(&plant_config_toml(5)).unwrap().build().unwrap();
        assert_eq!(c, certificate(5));
        assert_eq!(m.inputs(0), ring_model(5, &paper_input_grid()).unwrap().inputs(0));
    }

    #[test]
    fn corner_preset_rooms() {
        assert_eq!(corner_preset(5), vec![19.5, 18.5, 17.5, 17.5, 18.5]);
    }
}
