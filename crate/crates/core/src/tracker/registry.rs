use std::fmt;
use std::str::FromStr;

use super::{
    FailAfterTracker, LongTermTracker, NccTracker, OffsetTracker, OracleTracker,
    OrchestratorConfig, StaticTracker, TemplateReDetector, TemplateVerifier, Tracker,
};
use crate::bridge::{BridgeConfig, ExternalTracker};
use crate::dataset::Sequence;
use crate::error::{Error, Result};

/// A tracker selected by name:
/// `oracle`, `static`, `ncc`, `ltmu-mock`, `offset:<dx>,<dy>`,
/// `fail-after:<frame>` or `external:<command>`.
#[derive(Debug, Clone, PartialEq)]
pub enum TrackerSpec {
    Oracle,
    Static,
    Ncc,
    LtmuMock,
    Offset { dx: f64, dy: f64 },
    FailAfter(usize),
    External(String),
}

#[derive(Debug, Clone, Default)]
pub struct RegistryOptions {
    pub bridge: BridgeConfig,
    pub orchestrator: OrchestratorConfig,
}

impl TrackerSpec {
    /// A fresh instance for one run over `seq`.
    pub fn build(&self, seq: &Sequence, options: &RegistryOptions) -> Result<Box<dyn Tracker>> {
        Ok(match self {
            TrackerSpec::Oracle => Box::new(OracleTracker::new(seq)),
            TrackerSpec::Static => Box::new(StaticTracker::new()),
            TrackerSpec::Ncc => Box::new(NccTracker::new()),
            TrackerSpec::LtmuMock => Box::new(LongTermTracker::new(
                "ltmu-mock",
                NccTracker::new(),
                TemplateVerifier::default(),
                TemplateReDetector::default(),
                options.orchestrator,
            )?),
            TrackerSpec::Offset { dx, dy } => Box::new(OffsetTracker::new(seq, *dx, *dy)),
            TrackerSpec::FailAfter(k) => Box::new(FailAfterTracker::new(seq, *k)),
            TrackerSpec::External(cmd) => {
                Box::new(ExternalTracker::spawn(cmd, options.bridge.clone())?)
            }
        })
    }

    /// File-system safe name used for run directories and report rows.
    pub fn label(&self) -> String {
        let raw = self.to_string();
        let safe: String = raw
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        safe.chars().take(64).collect()
    }

    pub fn is_external(&self) -> bool {
        matches!(self, TrackerSpec::External(_))
    }
}

impl fmt::Display for TrackerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrackerSpec::Oracle => f.write_str("oracle"),
            TrackerSpec::Static => f.write_str("static"),
            TrackerSpec::Ncc => f.write_str("ncc"),
            TrackerSpec::LtmuMock => f.write_str("ltmu-mock"),
            TrackerSpec::Offset { dx, dy } => write!(f, "offset:{dx},{dy}"),
            TrackerSpec::FailAfter(k) => write!(f, "fail-after:{k}"),
            TrackerSpec::External(cmd) => write!(f, "external:{cmd}"),
        }
    }
}

impl FromStr for TrackerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownTracker(s.to_string());
        match s {
            "oracle" => return Ok(TrackerSpec::Oracle),
            "static" => return Ok(TrackerSpec::Static),
            "ncc" => return Ok(TrackerSpec::Ncc),
            "ltmu-mock" => return Ok(TrackerSpec::LtmuMock),
            _ => {}
        }
        let (kind, arg) = s.split_once(':').ok_or_else(unknown)?;
        match kind {
            "external" if !arg.trim().is_empty() => Ok(TrackerSpec::External(arg.to_string())),
            "fail-after" => arg
                .parse()
                .map(TrackerSpec::FailAfter)
                .map_err(|_| unknown()),
            "offset" => {
                let (dx, dy) = arg.split_once(',').ok_or_else(unknown)?;
                let parse = |v: &str| v.trim().parse::<f64>().ok().filter(|v| v.is_finite());
                match (parse(dx), parse(dy)) {
                    (Some(dx), Some(dy)) => Ok(TrackerSpec::Offset { dx, dy }),
                    _ => Err(unknown()),
                }
            }
            _ => Err(unknown()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_names() {
        assert_eq!(
            "oracle".parse::<TrackerSpec>().unwrap(),
            TrackerSpec::Oracle
        );
        assert_eq!(
            "ltmu-mock".parse::<TrackerSpec>().unwrap(),
            TrackerSpec::LtmuMock
        );
        assert_eq!(
            "offset:2.5,-1".parse::<TrackerSpec>().unwrap(),
            TrackerSpec::Offset { dx: 2.5, dy: -1.0 }
        );
        assert_eq!(
            "fail-after:40".parse::<TrackerSpec>().unwrap(),
            TrackerSpec::FailAfter(40)
        );
        assert_eq!(
            "external:python3 adapter.py --x"
                .parse::<TrackerSpec>()
                .unwrap(),
            TrackerSpec::External("python3 adapter.py --x".into())
        );
        for bad in ["siamrpn", "external:", "offset:1", "fail-after:x", ""] {
            assert!(
                matches!(bad.parse::<TrackerSpec>(), Err(Error::UnknownTracker(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn labels_are_path_safe() {
        let spec: TrackerSpec = "external:python3 a/b.py".parse().unwrap();
        assert_eq!(spec.label(), "external_python3_a_b.py");
        assert_eq!(TrackerSpec::Oracle.label(), "oracle");
        assert_eq!(spec.to_string().parse::<TrackerSpec>().unwrap(), spec);
    }
}
