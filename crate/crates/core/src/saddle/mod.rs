//! Saddle-point problems with bilinear coupling and their splitting schemes.

pub mod metric;
pub mod problem;
pub mod schemes;
pub mod solve;
pub mod tpd;

pub use metric::{InnerProduct, L2NormProx, Prox, QuadraticProx, RescaledProx};
pub use problem::{
    augment_objective, duality_bregman_gap, schur_spectrum, AugmentReport, SaddleConstants,
    SaddleProblem, SchurSpectrum,
};
pub use schemes::{
    agss_saddle_step, bsym_norm_dense, imex_saddle_step, key_lemma_gap, positivity_matrix,
    prox_saddle_lyapunov, prox_saddle_lyapunov_aor, prox_saddle_step, strong_saddle_gap,
    SaddleInner, SaddleInnerSolver,
};
pub use solve::{saddle_step_choice, solve_saddle, SaddleConfig, SaddleScheme, SaddleStepChoice};
pub use tpd::{
    apply_scaling, approx_s_condition, approx_s_margins, atpd_step, build_gs, choose_scaling,
    tpd_gss_step, PreconScaling, SchurAugmented, TpdConstants,
};
