//! Names, summaries and parameter schemas of the available checks.

pub struct CheckInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [(&'static str, &'static str)],
}

const SAMPLES: (&str, &str) = ("samples", "optional count overriding the experiment's samples");

pub const CHECKS: &[CheckInfo] = &[
    CheckInfo {
        name: "counterexample_m1",
        summary: "exact M-modulus of the tent composed with the converging clocks, and the monotonicity condition of the limit pair",
        params: &[
            ("n_list", "list of clock indices n >= 1"),
            ("delta", "window width > 0"),
            ("t_end", "time bound T > 0"),
        ],
    },
    CheckInfo {
        name: "ecf_linnik",
        summary: "sup distance between the empirical CF of a Linnik array at t and (1 + lambda^2/2)^(-t), with a trend over the n ladder",
        params: &[
            ("n_ladder", "strictly increasing list of n"),
            ("t", "time, default 1"),
            ("lambda", "{lo, hi, step}, default -3..3 step 0.25"),
            ("threshold", "largest accepted distance, default 0.03"),
            SAMPLES,
        ],
    },
    CheckInfo {
        name: "ks_compensator",
        summary: "two-sample KS of the array's A(t) against A(t) of the experiment's subordinator",
        params: &[("n_ladder", "strictly increasing list of n"), ("t", "time, default 1"), SAMPLES],
    },
    CheckInfo {
        name: "fdd",
        summary: "two-sample KS of a weighted combination of increments of A or M against the limit law",
        params: &[
            ("n_ladder", "strictly increasing list of n"),
            ("times", "non-decreasing list of times"),
            ("weights", "one weight per time"),
            ("component", "compensator | martingale"),
            ("target", "subordinated | zero"),
            SAMPLES,
        ],
    },
    CheckInfo {
        name: "hyp_c",
        summary: "Monte Carlo mean of A(tau(A(t))) - A(t) against a reference within 4 standard errors",
        params: &[
            ("n_ladder", "strictly increasing list of n"),
            ("t", "time below the array horizon"),
            ("reference", "\"one_over_n\" or a number"),
            SAMPLES,
        ],
    },
    CheckInfo {
        name: "hyp_d",
        summary: "Monte Carlo mean of A(tau(t)) against the bracket [t, t + 1/n] within 4 standard errors",
        params: &[("n_ladder", "strictly increasing list of n"), ("t", "level, default 1"), SAMPLES],
    },
    CheckInfo {
        name: "lindeberg",
        summary: "exact Lindeberg statistic of the (alpha, beta) family along an n ladder and whether it vanishes",
        params: &[
            ("cases", "list of {alpha, beta, expect_holds}"),
            ("epsilon", "truncation level > 0"),
            ("n_ladder", "strictly increasing list of n"),
        ],
    },
    CheckInfo {
        name: "mcleish",
        summary: "fraction of paths with sup_{s <= t} |[M]_s - A_s| > epsilon, against a bound",
        params: &[
            ("n_ladder", "strictly increasing list of n"),
            ("t", "time, default 1"),
            ("epsilons", "list of epsilon"),
            ("bound", "largest accepted fraction"),
            SAMPLES,
        ],
    },
    CheckInfo {
        name: "zero_qv",
        summary: "fraction of Lindeberg-family paths whose cells first..n all vanish, against the product of (1 - k^-beta)",
        params: &[
            ("n", "array size"),
            ("alpha", "jump exponent"),
            ("beta", "sparsity exponent"),
            ("first", "first cell, default 1"),
            SAMPLES,
        ],
    },
    CheckInfo {
        name: "transform_cf",
        summary: "sup distance between the empirical CF of the weighted Linnik transform and the quadrature oracle",
        params: &[
            ("n_ladder", "strictly increasing list of n"),
            ("t", "time, default 1"),
            ("weight", "weight function descriptor"),
            ("lambda", "{lo, hi, step}, default -3..3 step 0.25"),
            ("threshold", "largest accepted distance, default 0.03"),
            SAMPLES,
        ],
    },
    CheckInfo {
        name: "rescaling",
        summary: "two-sample KS between W(A(t)) - W(A(s)) and (W_t - W_s) sqrt((A_t - A_s)/(t - s))",
        params: &[
            ("specs", "optional list of subordinators, default the experiment's"),
            ("intervals", "list of [s, t] with s < t"),
            SAMPLES,
        ],
    },
    CheckInfo {
        name: "standardization",
        summary: "two-sample KS of M(t)/sqrt(A(t)) (0/0 = 0) against standard normal draws",
        params: &[("n_ladder", "strictly increasing list of n"), ("t", "time > 0, default 1"), SAMPLES],
    },
    CheckInfo {
        name: "lenglart",
        summary: "P(sup M^2 >= epsilon) against eta/epsilon + P(A(t) >= eta) within 3 joint standard errors",
        params: &[
            ("n_ladder", "strictly increasing list of n"),
            ("epsilon", "level > 0"),
            ("eta", "level > 0"),
            ("t", "time, default 1"),
            SAMPLES,
        ],
    },
    CheckInfo {
        name: "tightness",
        summary: "exceedance fractions of a modulus over (n, delta); passes when fractions do not increase as delta shrinks",
        params: &[
            ("source", "counterexample | array"),
            ("kind", "C | J | M"),
            ("n_list", "strictly increasing list of n"),
            ("delta_list", "list of window widths"),
            ("t_end", "time bound"),
            ("epsilon", "exceedance level"),
            SAMPLES,
        ],
    },
    CheckInfo {
        name: "jump_decomposition",
        summary: "number of realized paths whose [M](T) differs from the sum of squared jumps",
        params: &[("n_ladder", "strictly increasing list of n"), SAMPLES],
    },
];

pub fn find(name: &str) -> Option<&'static CheckInfo> {
    CHECKS.iter().find(|c| c.name == name)
}

pub fn list_text() -> String {
    CHECKS.iter().map(|c| format!("{}\t{}\n", c.name, c.summary)).collect()
}

pub fn describe_text(info: &CheckInfo) -> String {
    let mut out = format!("{}\n  {}\nparameters:\n", info.name, info.summary);
    for (p, d) in info.params {
        out.push_str(&format!("  {p}: {d}\n"));
    }
    out
}
