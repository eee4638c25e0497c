//! Preset scheme rows for the two comparison tables: N=6, γ=3/4, Q_b=4 and
//! N=15, γ=1/2, Q_b=4.
//!
//! Finite-field RS rows use exponent offset 1 (rows `β^1 … β^Δ`). The
//! GF(3²) UDM row uses the evaluation points `{1, α, α³, α⁵, α⁶, α⁷}`; every
//! other finite-field row uses `α^0, α^1, …`.

use serde::Serialize;

use crate::analysis::{analyze, AnalysisError, AnalysisOptions, AnalysisReport};
use crate::schemes::{BetaSource, Construction, SchemeConfig, SchemeError};

/// Figures a row is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Target {
    pub max_kappa: f64,
    pub avg_kappa: f64,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub label: &'static str,
    pub config: SchemeConfig,
    pub target: Target,
}

fn row(label: &'static str, config: SchemeConfig, max_kappa: f64, avg_kappa: f64, density: f64) -> TableRow {
    TableRow { label, config, target: Target { max_kappa, avg_kappa, density } }
}

/// N = 6, Δ = 4, ℓ = 3 before embedding.
pub fn table_one() -> Vec<TableRow> {
    let base = |c| SchemeConfig::new(c, 6, 4, 3);
    vec![
        row("RS based scheme", base(Construction::RsReal), 5.1e3, 334.0, 1.00),
        row(
            "RS+Companion GF(2^5)",
            base(Construction::RsCompanion).with_field("2^5").with_rs_offset(1),
            3.4e4,
            814.0,
            0.51,
        ),
        row("RS+Embedding GF(19)", base(Construction::RsNaturalEmbed).with_field("19"), 7.3e3, 312.0, 1.00),
        row(
            "RS+Companion GF(3^3)",
            base(Construction::RsCompanion).with_field("3^3").with_rs_offset(1),
            1.5e3,
            98.0,
            0.71,
        ),
        row("UDM-based scheme", base(Construction::UdmReal), 6.1e3, 265.0, 0.75),
        row("UDM+Embedding GF(7)", base(Construction::UdmNaturalEmbed).with_field("7"), 1.5e3, 98.0, 0.75),
        row("UDM+Companion GF(2^3)", base(Construction::UdmCompanion).with_field("2^3"), 583.0, 99.0, 0.32),
        row(
            "UDM+Companion GF(3^2)",
            base(Construction::UdmCompanion)
                .with_field("3^2")
                .with_beta(BetaSource::AlphaExponents { exponents: vec![0, 1, 3, 5, 6, 7] }),
            182.0,
            23.0,
            0.36,
        ),
    ]
}

/// N = 15, Δ = 4, ℓ = 2 before embedding.
pub fn table_two() -> Vec<TableRow> {
    let base = |c| SchemeConfig::new(c, 15, 4, 2);
    vec![
        row(
            "RS+Companion GF(2^5)",
            base(Construction::RsCompanion).with_field("2^5").with_rs_offset(1),
            2.8e5,
            751.0,
            0.53,
        ),
        row(
            "RS+Companion GF(5^3)",
            base(Construction::RsCompanion).with_field("5^3").with_rs_offset(1),
            1.1e5,
            183.0,
            0.83,
        ),
        row(
            "RS+Companion GF(3^4)",
            base(Construction::RsCompanion).with_field("3^4").with_rs_offset(1),
            3.5e4,
            202.0,
            0.67,
        ),
        row("UDM+Companion GF(2^4)", base(Construction::UdmCompanion).with_field("2^4"), 3.7e4, 286.0, 0.33),
        row("UDM+Companion GF(5^2)", base(Construction::UdmCompanion).with_field("5^2"), 1.1e4, 86.0, 0.62),
        row("UDM+Companion GF(3^3)", base(Construction::UdmCompanion).with_field("3^3"), 624.0, 96.0, 0.41),
    ]
}

pub fn table(index: u8) -> Option<Vec<TableRow>> {
    match index {
        1 => Some(table_one()),
        2 => Some(table_two()),
        _ => None,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("{label}: {source}")]
    Scheme { label: &'static str, source: SchemeError },
    #[error("{label}: {source}")]
    Analysis { label: &'static str, source: AnalysisError },
}

/// Builds and analyzes every row; report labels are the row labels.
pub fn run_table(rows: &[TableRow], opts: &AnalysisOptions) -> Result<Vec<AnalysisReport>, TableError> {
    rows.iter()
        .map(|r| {
            let coll = r.config.build().map_err(|source| TableError::Scheme { label: r.label, source })?;
            let mut report = analyze(&coll, opts).map_err(|source| TableError::Analysis { label: r.label, source })?;
            report.label = r.label.to_string();
            report.config_hash = Some(r.config.hash());
            Ok(report)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_match_row_headers() {
        let expect_one = [(4, 3, 1), (20, 15, 5), (4, 3, 1), (12, 9, 3), (4, 3, 1), (4, 3, 1), (12, 9, 3), (8, 6, 2)];
        for (r, want) in table_one().iter().zip(expect_one) {
            let c = r.config.build().unwrap();
            assert_eq!((c.delta(), c.ell(), c.s()), want, "{}", r.label);
            assert_eq!(c.q_b(), 4);
        }
        let expect_two = [(20, 10, 5), (12, 6, 3), (16, 8, 4), (16, 8, 4), (8, 4, 2), (12, 6, 3)];
        for (r, want) in table_two().iter().zip(expect_two) {
            let c = r.config.build().unwrap();
            assert_eq!((c.delta(), c.ell(), c.s()), want, "{}", r.label);
            assert_eq!(c.n_workers(), 15);
        }
    }
}
