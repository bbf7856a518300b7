use super::operator::{build_l_gamma_at, interior, TridiagonalOperator};
use crate::energy::EnergyModel;
use crate::error::Result;
use crate::field::MagnetizationField;
use crate::modulation::{coefficient_h1, fit_gauge, initial_gauge_guess, pair_h1, ModulationResult};
use crate::walls::{Sign, WallParams};

/// Remainders of the quadratic energy, dissipation and forcing expansions
/// at `m`, with the modulation data they were computed from.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionResidual {
    /// `|E(m) - E(g.w*) - ½((Lν,ν) + (Lρ,ρ))|`.
    pub coer_resid: f64,
    /// `|∫|m∧δE|² - (‖Lν‖² + ‖Lρ‖²)|`.
    pub diss_resid: f64,
    /// `|∫(m∧e1)·(m∧δE)|`.
    pub forcing_resid: f64,
    pub mu_h1: f64,
    pub nu_rho_h1: f64,
    pub modulation: ModulationResult,
}

/// Fits the gauge of `m`, decomposes the error and evaluates the expansion
/// remainders with `L_γ` centred on the fitted wall.
pub fn expansion_check(m: &MagnetizationField, gamma: f64, sign: Sign) -> Result<ExpansionResidual> {
    let model = EnergyModel::new(gamma)?;
    let grid = *m.grid();
    let seed = initial_gauge_guess(m, sign)?;
    let modulation = fit_gauge(m, gamma, sign, seed)?;
    let g = modulation.gauge;
    let op: TridiagonalOperator = build_l_gamma_at(gamma, &grid, g.y)?;
    let nu = interior(&modulation.nu);
    let rho = interior(&modulation.rho);
    let w = WallParams::new(gamma, sign, g)?.profile(&grid);
    let de = model.energy_difference(&grid, m.values(), w.values());
    let quad = 0.5 * (op.quadratic_form(nu) + op.quadratic_form(rho));
    let lnu = op.apply(nu);
    let lrho = op.apply(rho);
    let lsq = op.inner(&lnu, &lnu) + op.inner(&lrho, &lrho);
    let (diss, forcing) = model.dissipation_terms(&grid, m.values());
    Ok(ExpansionResidual {
        coer_resid: (de - quad).abs(),
        diss_resid: (diss - lsq).abs(),
        forcing_resid: forcing.abs(),
        mu_h1: coefficient_h1(m, &modulation.mu),
        nu_rho_h1: pair_h1(m, &modulation.nu, &modulation.rho),
        modulation,
    })
}
