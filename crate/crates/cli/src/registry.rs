//! Registered verification suites, sorted by name.

use crate::error::Result;
use crate::suites::{self, Context, SuiteOutcome};

pub type SuiteFn = fn(&Context) -> Result<SuiteOutcome>;

pub struct Suite {
    pub name: &'static str,
    pub description: &'static str,
    /// The mathematical statement the suite verifies.
    pub anchor: &'static str,
    /// Acceptance criterion exercised by this suite, if any.
    pub criterion: Option<u8>,
    pub run: SuiteFn,
}

pub const SUITES: &[Suite] = &[
    Suite {
        name: "certify",
        description: "grid certification of ellipticity, boundedness and periodicity of the coefficients",
        anchor: "standing assumptions: σ_min(B(t)) ≥ μ₀, ‖B(t)‖ ≤ C, T-periodic A, B, f",
        criterion: None,
        run: suites::certify::run,
    },
    Suite {
        name: "composition",
        description: "kernel composition, Chapman–Kolmogorov and degree non-increase on random triples",
        anchor: "P_{s,r}P_{r,t} = P_{s,t}; P_{s,t} maps polynomials of degree k to degree ≤ k",
        criterion: Some(3),
        run: suites::composition::run,
    },
    Suite {
        name: "decay",
        description: "exact decay rate of the peripheral eigenfunction, refutation below ω₀, Jordan growth",
        anchor: "exponential dichotomy: ‖P_{s,t}(φ - M_tφ)‖ ≤ M e^{ω(t-s)}‖φ‖ for every ω > ω₀, sharp at ω₀ iff semisimple",
        criterion: Some(8),
        run: suites::decay::run,
    },
    Suite {
        name: "global_decay",
        description: "global decay bound with the computed constant c₀ over the test family",
        anchor: "‖P_{s,t}(φ - M_tφ)‖_{L²(ν_s)} ≤ e^{c₀(t-s)}‖φ‖_{L²(ν_t)}, c₀ = inf_ω ω μ₀²/(M(ω)² C²)",
        criterion: Some(9),
        run: suites::global_decay::run,
    },
    Suite {
        name: "hyper",
        description: "hypercontractivity exponent path, norm margins and the derivative of α(s)",
        anchor: "‖P_{s,t}φ‖_{L^{p(s,t)}(ν_s)} ≤ ‖φ‖_{L^q(ν_t)}, p(s,t) = 1 + (q-1)exp(∫_s^t ‖Q∞^{1/2}B^{-T}‖^{-2})",
        criterion: Some(12),
        run: suites::hyper::run,
    },
    Suite {
        name: "kernel",
        description: "transition kernel by the ODE route against quadrature of its integral form",
        anchor: "P_{s,t}φ(x) = E φ(U(t,s)x + g(t,s) + Q(t,s)^{1/2}Z)",
        criterion: Some(2),
        run: suites::kernel::run,
    },
    Suite {
        name: "lattice",
        description: "eigenvalue lattices of G_# for the worked examples and the configured field",
        anchor: "σ_p(G_#) ⊃ (1/T)log σ(U(T,0)) + (2πi/T)ℤ ∪ (2πi/T)ℤ; autonomous λ = 2kπi/T + Σ n_j λ_j",
        criterion: Some(7),
        run: suites::lattice::run,
    },
    Suite {
        name: "logsob",
        description: "quadratic-form identity of L(t) and the nonautonomous log-Sobolev inequality",
        anchor: "∫|φ|^p log|φ| dν_t ≤ ‖φ‖_p^p log‖φ‖_p + c(p,t)(Re⟨-L(t)φ, φ_p⟩ + (1/p)∫|φ|^p ∂_tρ)",
        criterion: Some(11),
        run: suites::logsob::run,
    },
    Suite {
        name: "measures",
        description: "entrance law constructions, flow property and invariance of the evolution system",
        anchor: "ν_t = N(g(t,-∞), Q(t,-∞)); ∫P_{s,t}φ dν_s = ∫φ dν_t",
        criterion: Some(4),
        run: suites::measures::run,
    },
    Suite {
        name: "oracle",
        description: "Monte-Carlo oracle: Euler–Maruyama and exact sampling against the kernel moments",
        anchor: "X_t | X_s = x ~ N(U(t,s)x + g(t,s), Q(t,s)) for dX = (A X + f)dt + B dW",
        criterion: Some(5),
        run: suites::oracle::run,
    },
    Suite {
        name: "poincare",
        description: "Poincaré inequality for ν_t on time slices",
        anchor: "Var_{ν_t}(φ) ≤ M(ω)²C²/(2|ω|) ∫|∇φ|² dν_t",
        criterion: Some(10),
        run: suites::poincare::run,
    },
    Suite {
        name: "propagate",
        description: "evolution operator: cocycle law, matrix exponential, Liouville formula, Floquet data",
        anchor: "U(t,s) = U(t,r)U(r,s); det U(t,s) = exp ∫_s^t tr A(r) dr",
        criterion: Some(1),
        run: suites::propagate::run,
    },
    Suite {
        name: "spectrum",
        description: "Galerkin spectrum of the Poincaré operator V(t) = P_{t-T,t}",
        anchor: "1 is a simple eigenvalue of V(t) with projection M_t; σ(V(t)) \\ {1} ⊂ {|λ| ≤ r₀}",
        criterion: Some(6),
        run: suites::spectrum::run,
    },
];

pub fn find(name: &str) -> Option<&'static Suite> {
    SUITES.iter().find(|s| s.name == name)
}

/// Suite for an acceptance criterion.
pub fn for_criterion(criterion: u8) -> Option<&'static Suite> {
    SUITES.iter().find(|s| s.criterion == Some(criterion))
}

/// One line per suite: name, description and anchor.
pub fn listing() -> String {
    let width = SUITES.iter().map(|s| s.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for s in SUITES {
        out.push_str(&format!(
            "{:width$}  {}\n{:width$}  verifies: {}\n",
            s.name, s.description, "", s.anchor
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_sorted_and_complete() {
        assert!(SUITES.len() >= 10);
        assert!(SUITES.windows(2).all(|w| w[0].name < w[1].name));
        for c in 1..=12u8 {
            assert_eq!(
                SUITES.iter().filter(|s| s.criterion == Some(c)).count(),
                1,
                "criterion {c}"
            );
        }
        assert!(SUITES
            .iter()
            .all(|s| !s.anchor.is_empty() && !s.description.is_empty()));
        assert_eq!(listing(), listing());
    }
}
