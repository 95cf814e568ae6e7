use serde::{Deserialize, Serialize};

use crate::lshade::EAConfig;

/// The loop's entire edit surface: mutation-side knobs only. Crossover,
/// polish and the generator have no fields here, so no proposal can reach
/// them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub scout_fraction: f64,
    pub cma_fraction: f64,
    pub p_min: f64,
    pub stagnation_window: u32,
    pub f_memory_init: f64,
    pub cr_memory_init: f64,
}

/// Field names of [`OperatorConfig`], in declaration order.
pub const OPERATOR_FIELDS: [&str; 6] = [
    "scout_fraction",
    "cma_fraction",
    "p_min",
    "stagnation_window",
    "f_memory_init",
    "cr_memory_init",
];

impl Default for OperatorConfig {
    fn default() -> Self {
        Self::from_ea(&EAConfig::default())
    }
}

impl OperatorConfig {
    pub fn from_ea(cfg: &EAConfig) -> Self {
        Self {
            scout_fraction: cfg.scout_fraction,
            cma_fraction: cfg.cma_fraction,
            p_min: cfg.p_min,
            stagnation_window: cfg.stagnation_window,
            f_memory_init: cfg.f_memory_init,
            cr_memory_init: cfg.cr_memory_init,
        }
    }

    /// `base` with this configuration's fields written over it.
    pub fn apply(&self, base: &EAConfig) -> EAConfig {
        EAConfig {
            scout_fraction: self.scout_fraction,
            cma_fraction: self.cma_fraction,
            p_min: self.p_min,
            stagnation_window: self.stagnation_window,
            f_memory_init: self.f_memory_init,
            cr_memory_init: self.cr_memory_init,
            ..base.clone()
        }
    }

    /// Every violated invariant; empty when the configuration is usable.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        for (name, v) in [("scout_fraction", self.scout_fraction), ("cma_fraction", self.cma_fraction)] {
            if !unit(v) {
                out.push(format!("{name}: fraction out of range [0, 1]: {v}"));
            }
        }
        if unit(self.scout_fraction) && unit(self.cma_fraction) && !(self.scout_fraction + self.cma_fraction < 1.0) {
            out.push("scout_fraction + cma_fraction must be below 1".into());
        }
        if !(self.p_min > 0.0 && self.p_min <= 1.0) {
            out.push(format!("p_min: fraction out of range (0, 1]: {}", self.p_min));
        }
        if self.stagnation_window < 1 {
            out.push("stagnation_window must be at least 1".into());
        }
        if !(self.f_memory_init > 0.0 && self.f_memory_init <= 1.0) {
            out.push(format!("f_memory_init out of range (0, 1]: {}", self.f_memory_init));
        }
        if !unit(self.cr_memory_init) {
            out.push(format!("cr_memory_init: fraction out of range [0, 1]: {}", self.cr_memory_init));
        }
        out
    }
}

/// One proposal: free-text reasoning plus a tagged configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposalEnvelope {
    pub analysis: String,
    pub strategy: String,
    pub experiment_tag: String,
    pub config: OperatorConfig,
}

/// Strict parse: the whole text must be one JSON envelope, nothing around it
/// but whitespace.
pub fn parse_envelope(text: &str) -> Result<ProposalEnvelope, String> {
    serde_json::from_str(text.trim()).map_err(|e| format!("unparseable proposal: {e}"))
}

/// `[a-z][a-z0-9_]*`
pub fn is_snake_case(tag: &str) -> bool {
    let mut chars = tag.chars();
    matches!(chars.next(), Some('a'..='z')) && chars.all(|c| matches!(c, 'a'..='z' | '0'..='9' | '_'))
}

/// Checks the tag and configuration. Returns every violation found.
pub fn validate_proposal(env: &ProposalEnvelope) -> Result<(), Vec<String>> {
    let mut errs = Vec::new();
    if !is_snake_case(&env.experiment_tag) {
        errs.push(format!("experiment_tag {:?} is not snake_case", env.experiment_tag));
    }
    if env.analysis.trim().is_empty() {
        errs.push("analysis is empty".into());
    }
    if env.strategy.trim().is_empty() {
        errs.push("strategy is empty".into());
    }
    errs.extend(env.config.violations());
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn envelope() -> ProposalEnvelope {
        ProposalEnvelope {
            analysis: "scouts look too weak".into(),
            strategy: "raise the scout share".into(),
            experiment_tag: "more_scouts_v2".into(),
            config: OperatorConfig {
                scout_fraction: 0.3,
                ..Default::default()
            },
        }
    }

    #[test]
    fn well_formed_is_ok() {
        assert_eq!(validate_proposal(&envelope()), Ok(()));
    }

    #[test]
    fn fraction_out_of_range() {
        let mut e = envelope();
        e.config.scout_fraction = 1.5;
        let errs = validate_proposal(&e).unwrap_err();
        assert!(errs.iter().any(|m| m.contains("fraction out of range")), "{errs:?}");
    }

    #[test]
    fn tag_must_be_snake_case() {
        for bad in ["My-Tag", "", "9lives", "_x", "a b", "tagÉ"] {
            let mut e = envelope();
            e.experiment_tag = bad.into();
            let errs = validate_proposal(&e).unwrap_err();
            assert!(errs.iter().any(|m| m.contains("not snake_case")));
        }
        assert!(is_snake_case("a"));
        assert!(is_snake_case("cma_off_3"));
    }

    #[test]
    fn sum_and_window_guards() {
        let mut e = envelope();
        e.config.scout_fraction = 0.6;
        e.config.cma_fraction = 0.4;
        e.config.stagnation_window = 0;
        assert_eq!(validate_proposal(&e).unwrap_err().len(), 2);
    }

    #[test]
    fn strict_json_only() {
        let text = serde_json::to_string(&envelope()).unwrap();
        assert_eq!(parse_envelope(&format!("  {text}\n")).unwrap(), envelope());
        assert!(parse_envelope(&format!("Here is my proposal: {text}")).is_err());
        assert!(parse_envelope(&text.replace("\"strategy\"", "\"plan\"")).is_err());
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["config"]["crossover_period"] = 7.into();
        assert!(parse_envelope(&v.to_string()).is_err());
    }

    #[test]
    fn schema_has_no_frozen_fields() {
        let v = serde_json::to_value(OperatorConfig::default()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        let mut expected = OPERATOR_FIELDS.to_vec();
        expected.sort_unstable();
        assert_eq!(keys, expected);
        for frozen in ["crossover", "bracket", "polish", "local", "generator", "instance", "oscillation"] {
            assert!(keys.iter().all(|k| !k.contains(frozen)));
        }
    }

    #[test]
    fn apply_round_trips() {
        let op = OperatorConfig {
            p_min: 0.2,
            stagnation_window: 9,
            ..Default::default()
        };
        let ea = op.apply(&EAConfig::default());
        assert_eq!(OperatorConfig::from_ea(&ea), op);
        assert_eq!(ea.n_init, 180);
    }
}
