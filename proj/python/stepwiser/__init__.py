"""Stepwise judge pipeline: C++ core exposed through pybind11.

The heavy lifting (verification, chunk parsing, Q-value labeling, verdict
handling, benchmark scoring, chunk-reset search, the toy GRPO trainer) lives
in the compiled ``_core`` extension; this package re-exports it.
"""

from stepwiser._core import (  # noqa: F401
    DataError,
    ConfigError,
    __version__,
    analytic_q,
    approx_token_count,
    best_of_n_q,
    extract_boxed,
    grpo_advantages,
    harmonic_mean,
    label_abs_q,
    label_rel_effective,
    label_rel_ratio,
    majority_vote,
    parse_chunks,
    parse_verdict,
    render_judge_prompt,
    reward,
    sim_search_success_rate,
    split_double_newline,
    train_toy,
    verify_answer,
    verify_reconstruction,
)
