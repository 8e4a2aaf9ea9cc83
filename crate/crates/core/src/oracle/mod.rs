//! Exact small-instance solvers and policy evaluators.
//!
//! `OPT_pack` comes from a dynamic program over (node, consumed budget),
//! `OPT_lp` and `OPT_pen` from explicit linear programs, `OPT_{pen^θ}` from
//! projected gradient ascent on the smoothed objective. On every explicit
//! instance `OPT_pack ≤ OPT_lp ≤ OPT_pen`.

mod dp;
mod eval;
mod lp;
mod pen;

pub use dp::{solve_pack_dp, solve_pack_dp_capped, PackSolution, DP_STATE_CAP};
pub use eval::{
    eval_policy_exact, eval_policy_mc, solver_seed, trace_episode, AuditMode, EvalReport, GroupSummary, McOptions, PolicyFactory,
    AUDIT_TOL,
};
pub use lp::{solve_lp_explicit, solve_pen_lp, LpSolution, LP_SIZE_CAP};
pub use pen::{solve_pen_explicit, PenSolution, PEN_MAX_ITERS};
