//! Conversion of physical cell parameters into the dimensionless constants
//! used by the flow and membrane solvers.
//!
//! The scaling is x = L x', w = c_w w', t = (L/c_w) t', u = u_max u',
//! v = c_v v', with pressure and force absorbed into kappa so that the bulk
//! momentum balance reads
//!
//!   (kappa/L^2) Re (dw'/dt' + (w'.grad)w') + w' = -grad p' + (kappa/L^2) lap w' + f'.
//!
//! For realistic cell parameters both kappa/L^2 terms are tiny, so the solver
//! keeps only the Darcy balance w' = -grad p' + f'. This module computes the
//! groups that justify dropping each term and the reaction constants
//! C1, C2, C3 consumed by the membrane kinetics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Unit conversions, kept in one table so no other code does unit arithmetic.
mod units {
    /// 1 Pa s = 1 pN s / um^2 (1 Pa = 1e12 pN / 1e12 um^2).
    pub const PA_S_TO_PN_S_PER_UM2: f64 = 1.0;

    /// Kinematic viscosity in um^2/s from dynamic viscosity in Pa s over
    /// density in g/cm^3.
    ///
    /// Pa s = 1e-3 g/(um s) and g/cm^3 = 1e-12 g/um^3, so the quotient
    /// carries a factor 1e-3 / 1e-12 = 1e9.
    pub const KINEMATIC_UM2_PER_S: f64 = 1e9;
}

#[derive(Debug, Error)]
pub enum NondimError {
    #[error("physical parameter `{name}` must be strictly positive and finite, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("dimensionless group `{name}` is not finite (inputs out of range)")]
    NotFinite { name: &'static str },
}

/// Physical parameter set. Every field name carries its unit.
///
/// Sources are measured cell-scale quantities; the kinetic constants gamma,
/// beta1, beta2 are the dimensional adsorption and desorption rates. gamma
/// multiplies u^alpha * (1 - u) * v, so its unit um^(2 alpha + 3) /
/// (mol^(alpha + 1) s) depends on the exponent alpha carried alongside.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParams {
    /// Cell diameter, um.
    pub l_um: f64,
    /// Duration of the polarization process, s.
    pub t_pol_s: f64,
    /// Cytoplasm mass density, g/cm^3.
    pub rho_g_per_cm3: f64,
    /// Cytoplasm dynamic viscosity, Pa s.
    pub dyn_viscosity_pa_s: f64,
    /// Typical intracellular flow speed, um/s.
    pub c_w_um_per_s: f64,
    /// Hydraulic permeability over dynamic viscosity, um^4 / (pN s).
    pub kappa_tilde_um4_per_pn_s: f64,
    /// Diffusivity of membrane-bound protein, um^2/s.
    pub nu_um2_per_s: f64,
    /// Diffusivity of the cytosolic pool, um^2/s.
    pub mu_um2_per_s: f64,
    /// Saturation surface density of the bound protein, mol/um^2.
    pub u_max_mol_per_um2: f64,
    /// Typical cytosolic concentration, mol/um^3.
    pub c_v_mol_per_um3: f64,
    /// Adsorption rate constant, um^(2 alpha + 3) / (mol^(alpha + 1) s).
    pub gamma_kinetic: f64,
    /// Flow-driven desorption rate per unit speed, 1/um.
    pub beta1_per_um: f64,
    /// Spontaneous desorption rate, 1/s.
    pub beta2_per_s: f64,
    /// Cooperativity exponent of the adsorption law, dimensionless.
    pub alpha: f64,
}

impl Default for PhysicalParams {
    /// Mid-range literature values for a blebbing cell.
    fn default() -> Self {
        PhysicalParams {
            l_um: 15.0,
            t_pol_s: 150.0,
            rho_g_per_cm3: 1.065,
            dyn_viscosity_pa_s: 0.05,
            c_w_um_per_s: 0.1,
            kappa_tilde_um4_per_pn_s: 0.1,
            nu_um2_per_s: 0.003,
            mu_um2_per_s: 30.0,
            u_max_mol_per_um2: 1e-22,
            c_v_mol_per_um3: 1e-18,
            gamma_kinetic: 3e38,
            beta1_per_um: 3.3,
            beta2_per_s: 7e-4,
            alpha: 1.0,
        }
    }
}

impl PhysicalParams {
    /// Every field must be strictly positive and finite.
    pub fn validate(&self) -> Result<(), NondimError> {
        let fields: [(&'static str, f64); 14] = [
            ("l_um", self.l_um),
            ("t_pol_s", self.t_pol_s),
            ("rho_g_per_cm3", self.rho_g_per_cm3),
            ("dyn_viscosity_pa_s", self.dyn_viscosity_pa_s),
            ("c_w_um_per_s", self.c_w_um_per_s),
            ("kappa_tilde_um4_per_pn_s", self.kappa_tilde_um4_per_pn_s),
            ("nu_um2_per_s", self.nu_um2_per_s),
            ("mu_um2_per_s", self.mu_um2_per_s),
            ("u_max_mol_per_um2", self.u_max_mol_per_um2),
            ("c_v_mol_per_um3", self.c_v_mol_per_um3),
            ("gamma_kinetic", self.gamma_kinetic),
            ("beta1_per_um", self.beta1_per_um),
            ("beta2_per_s", self.beta2_per_s),
            ("alpha", self.alpha),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(NondimError::InvalidParameter { name, value });
            }
        }
        Ok(())
    }

    /// Kinematic viscosity lambda in um^2/s.
    pub fn kinematic_viscosity_um2_per_s(&self) -> f64 {
        self.dyn_viscosity_pa_s / self.rho_g_per_cm3 * units::KINEMATIC_UM2_PER_S
    }

    /// Darcy permeability kappa in um^2.
    pub fn permeability_um2(&self) -> f64 {
        self.kappa_tilde_um4_per_pn_s * self.dyn_viscosity_pa_s * units::PA_S_TO_PN_S_PER_UM2
    }
}

/// Which terms of the full model the computed groups allow dropping.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionFlags {
    /// Inertia (time derivative and convection of w) negligible:
    /// (kappa/L^2) * Re below 1e-4.
    pub inertia_negligible: bool,
    /// Cytosolic pool treated as spatially uniform (v = 1): Pe below 0.1
    /// and the pool large relative to what the membrane can bind,
    /// c_v L / u_max above 10.
    pub bulk_pool_uniform: bool,
    /// Human-readable justification for each flag.
    pub notes: Vec<String>,
}

/// Dimensionless constants and diagnostic group magnitudes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimensionlessReport {
    /// Reynolds number c_w L / lambda.
    pub re: f64,
    /// Peclet number of the cytosolic pool, c_w L / mu.
    pub pe: f64,
    /// Membrane diffusion coefficient nu / (L c_w).
    pub epsilon: f64,
    /// Viscous-term prefactor kappa / L^2.
    pub kappa_over_l2: f64,
    /// Flow-driven desorption constant L beta1.
    pub c1: f64,
    /// Spontaneous desorption constant (L / c_w) beta2.
    pub c2: f64,
    /// Adsorption constant (L u_max^alpha c_v / c_w) gamma.
    pub c3: f64,
    /// Final time T c_w / L in flow units.
    pub t_hat: f64,
    /// Dimensionless force per unit physical force density:
    /// multiply a force density in pN/um^3 by this factor. Equals
    /// kappa / (rho lambda c_w), i.e. kappa_tilde / c_w.
    pub f_hat_scale: f64,
    pub flags: ReductionFlags,
}

/// Threshold below which the inertial prefactor (kappa/L^2) Re is dropped.
pub const INERTIA_THRESHOLD: f64 = 1e-4;
/// Peclet number below which the cytosolic pool mixes fast enough to be uniform.
pub const PECLET_THRESHOLD: f64 = 0.1;
/// Minimum pool-to-membrane capacity ratio c_v L / u_max for a uniform pool.
pub const POOL_RATIO_THRESHOLD: f64 = 10.0;

/// Computes all dimensionless groups from a physical parameter set.
pub fn nondimensionalize(p: &PhysicalParams) -> Result<DimensionlessReport, NondimError> {
    p.validate()?;

    let lambda = p.kinematic_viscosity_um2_per_s();
    let kappa = p.permeability_um2();
    let l = p.l_um;
    let c_w = p.c_w_um_per_s;

    let re = c_w * l / lambda;
    let pe = c_w * l / p.mu_um2_per_s;
    let epsilon = p.nu_um2_per_s / (l * c_w);
    let kappa_over_l2 = kappa / (l * l);
    let c1 = l * p.beta1_per_um;
    let c2 = l / c_w * p.beta2_per_s;
    let c3 = l * p.u_max_mol_per_um2.powf(p.alpha) * p.c_v_mol_per_um3 / c_w * p.gamma_kinetic;
    let t_hat = p.t_pol_s * c_w / l;
    let f_hat_scale = p.kappa_tilde_um4_per_pn_s / c_w;

    let inertia_group = kappa_over_l2 * re;
    let pool_ratio = p.c_v_mol_per_um3 * l / p.u_max_mol_per_um2;
    let inertia_negligible = inertia_group < INERTIA_THRESHOLD;
    let bulk_pool_uniform = pe < PECLET_THRESHOLD && pool_ratio > POOL_RATIO_THRESHOLD;

    let notes = vec![
        format!(
            "inertial prefactor (kappa/L^2)*Re = {inertia_group:.3e} {} {INERTIA_THRESHOLD:.0e}: \
             time derivative and convection of the flow {}",
            if inertia_negligible { "<" } else { ">=" },
            if inertia_negligible { "dropped" } else { "kept" },
        ),
        format!(
            "Pe = {pe:.3e} ({} {PECLET_THRESHOLD}) and c_v*L/u_max = {pool_ratio:.3e} ({} {POOL_RATIO_THRESHOLD}): \
             cytosolic pool {} as uniform v = 1",
            if pe < PECLET_THRESHOLD { "<" } else { ">=" },
            if pool_ratio > POOL_RATIO_THRESHOLD { ">" } else { "<=" },
            if bulk_pool_uniform { "treated" } else { "not treated" },
        ),
    ];

    let report = DimensionlessReport {
        re,
        pe,
        epsilon,
        kappa_over_l2,
        c1,
        c2,
        c3,
        t_hat,
        f_hat_scale,
        flags: ReductionFlags { inertia_negligible, bulk_pool_uniform, notes },
    };

    for (name, value) in [
        ("re", report.re),
        ("pe", report.pe),
        ("epsilon", report.epsilon),
        ("kappa_over_l2", report.kappa_over_l2),
        ("c1", report.c1),
        ("c2", report.c2),
        ("c3", report.c3),
        ("t_hat", report.t_hat),
        ("f_hat_scale", report.f_hat_scale),
    ] {
        if !value.is_finite() {
            return Err(NondimError::NotFinite { name });
        }
    }
    Ok(report)
}

/// Aligned plain-text rendering of a report, one quantity per line.
pub fn format_report(r: &DimensionlessReport) -> String {
    let mut out = String::new();
    let rows: [(&str, f64); 9] = [
        ("Reynolds number Re", r.re),
        ("Peclet number Pe", r.pe),
        ("membrane diffusion epsilon", r.epsilon),
        ("viscous prefactor kappa/L^2", r.kappa_over_l2),
        ("desorption by flow C1", r.c1),
        ("spontaneous desorption C2", r.c2),
        ("adsorption C3", r.c3),
        ("final time T_hat", r.t_hat),
        ("force scale f_hat per pN/um^3", r.f_hat_scale),
    ];
    for (label, value) in rows {
        out.push_str(&format!("{label:<32}{value:>14.6e}\n"));
    }
    out.push_str(&format!(
        "{:<32}{:>14}\n",
        "inertia negligible", r.flags.inertia_negligible
    ));
    out.push_str(&format!(
        "{:<32}{:>14}\n",
        "bulk pool uniform", r.flags.bulk_pool_uniform
    ));
    for note in &r.flags.notes {
        out.push_str("  ");
        out.push_str(note);
        out.push('\n');
    }
    out
}
