/// Numerical thresholds used by the validation and solve routines.
///
/// All norms are max-abs-entry norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub hermitian: f64,
    pub psd: f64,
    pub jmodule: f64,
    pub factor: f64,
    /// Relative to the max norm of D(x) at the node.
    pub rank: f64,
    /// `F1(x) J F1*(x)` below this (scaled by `1 + |F1|^2`) counts as a vanishing diagonal.
    pub diagonal: f64,
    pub cond_limit: f64,
    pub solve: f64,
    pub operator: f64,
    /// Relative to `b - a`.
    pub off_cut_margin: f64,
    pub hermitian_drift: f64,
    pub monotone: f64,
    pub psd_fail: f64,
    pub fd_consistency: f64,
    pub ode: f64,
    /// Relative to `b - a`.
    pub ode_margin: f64,
    pub max_halvings: usize,
    /// Finite-difference step for F1' when no analytic derivative is supplied, relative to `b - a`.
    pub fd_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-10,
            psd: 1e-10,
            jmodule: 1e-8,
            factor: 1e-8,
            rank: 1e-9,
            diagonal: 1e-10,
            cond_limit: 1e12,
            solve: 1e-8,
            operator: 1e-12,
            off_cut_margin: 1e-8,
            hermitian_drift: 1e-7,
            monotone: 1e-6,
            psd_fail: 1e-6,
            fd_consistency: 1e-6,
            ode: 1e-8,
            ode_margin: 1e-3,
            max_halvings: 12,
            fd_step: 1e-6,
        }
    }
}

impl Tolerances {
    /// Multiplies every acceptance threshold by `factor`; structural limits
    /// (`cond_limit`, `max_halvings`, `fd_step`, margins) are left alone.
    pub fn scaled(mut self, factor: f64) -> Self {
        for t in [
            &mut self.hermitian,
            &mut self.psd,
            &mut self.jmodule,
            &mut self.factor,
            &mut self.diagonal,
            &mut self.solve,
            &mut self.operator,
            &mut self.hermitian_drift,
            &mut self.monotone,
            &mut self.psd_fail,
            &mut self.fd_consistency,
            &mut self.ode,
        ] {
            *t *= factor;
        }
        self
    }
}
