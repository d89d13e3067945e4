//! Gas metering for deployment and rating calls, and the cost comparison
//! across plain and oracle-backed contract variants.
//!
//! Cost primitives and fees come from a calibration file. The shipped default
//! calibration is tuned so that the report matches the dollar figures
//! observed for the original contract in a local test network; it is a model
//! fitted to those figures, not a measurement.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::{RateOutcome, StorageTouches};

/// Calibration shipped with the crate.
pub const DEFAULT_CALIBRATION: &str = include_str!("../calibration/default.toml");

const NANOS_PER_UNIT: u64 = 1_000_000_000;

#[derive(Debug, Error)]
pub enum GasError {
    #[error("invalid cost model: {0}")]
    InvalidModel(String),
    #[error("invalid currency amount {0:?}")]
    BadAmount(String),
    #[error("cannot read calibration: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse calibration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("no cost model for mode {0}")]
    MissingMode(OracleMode),
}

/// Fixed-point currency amount with nine decimal places.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Currency {
    nanos: u64,
}

impl Currency {
    pub const ZERO: Currency = Currency { nanos: 0 };

    pub const fn from_nanos(nanos: u64) -> Self {
        Self { nanos }
    }

    pub const fn from_units(units: u64) -> Self {
        Self { nanos: units * NANOS_PER_UNIT }
    }

    pub const fn nanos(self) -> u64 {
        self.nanos
    }

    pub fn as_f64(self) -> f64 {
        self.nanos as f64 / NANOS_PER_UNIT as f64
    }

    pub fn is_zero(self) -> bool {
        self.nanos == 0
    }

    /// `gas · price`, where `price` is the amount charged per gas unit.
    pub fn for_gas(gas: u64, price: Currency) -> Self {
        let nanos = gas as u128 * price.nanos as u128;
        Self { nanos: u64::try_from(nanos).expect("currency overflow") }
    }
}

impl std::ops::Add for Currency {
    type Output = Currency;

    fn add(self, rhs: Currency) -> Currency {
        Currency { nanos: self.nanos.checked_add(rhs.nanos).expect("currency overflow") }
    }
}

impl fmt::Display for Currency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.nanos / NANOS_PER_UNIT;
        let frac = self.nanos % NANOS_PER_UNIT;
        if frac == 0 {
            write!(f, "{whole}")
        } else {
            let digits = format!("{frac:09}");
            write!(f, "{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl FromStr for Currency {
    type Err = GasError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GasError::BadAmount(s.to_string());
        let (whole, frac) = s.trim().split_once('.').unwrap_or((s.trim(), ""));
        if whole.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if frac.len() > 9 || !whole.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let whole: u64 = if whole.is_empty() { 0 } else { whole.parse().map_err(|_| bad())? };
        let frac_nanos: u64 = if frac.is_empty() { 0 } else { format!("{frac:0<9}").parse().map_err(|_| bad())? };
        whole
            .checked_mul(NANOS_PER_UNIT)
            .and_then(|n| n.checked_add(frac_nanos))
            .map(Currency::from_nanos)
            .ok_or_else(bad)
    }
}

impl Serialize for Currency {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Currency {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// Closed interval of currency amounts. A fixed amount has `low == high`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CurrencyRange {
    pub low: Currency,
    pub high: Currency,
}

impl CurrencyRange {
    pub fn fixed(amount: Currency) -> Self {
        Self { low: amount, high: amount }
    }

    pub fn is_fixed(&self) -> bool {
        self.low == self.high
    }

    pub fn shifted(self, by: Currency) -> Self {
        Self { low: self.low + by, high: self.high + by }
    }
}

impl fmt::Display for CurrencyRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_fixed() {
            write!(f, "{}", self.low)
        } else {
            write!(f, "{}-{}", self.low, self.high)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    /// Plain contract, no off-chain calls.
    None,
    /// Provable-style oracle: one fixed fee per rating.
    ProvableSim,
    /// Chainlink-style oracle: fee somewhere in a configured interval.
    ChainlinkSim,
}

impl OracleMode {
    pub const ALL: [OracleMode; 3] = [Self::None, Self::ProvableSim, Self::ChainlinkSim];

    /// Name used in reports.
    pub fn label(self) -> &'static str {
        match self {
            Self::None => "Simple",
            Self::ProvableSim => "ProvableSim",
            Self::ChainlinkSim => "ChainlinkSim",
        }
    }

    /// Name used on the command line and in calibration files.
    pub fn key(self) -> &'static str {
        match self {
            Self::None => "simple",
            Self::ProvableSim => "provable",
            Self::ChainlinkSim => "chainlink",
        }
    }
}

impl fmt::Display for OracleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for OracleMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.key() == s || m.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown mode {s:?}; expected simple, provable or chainlink"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub sload_cost: u64,
    pub sstore_new_cost: u64,
    pub sstore_update_cost: u64,
    pub base_tx_cost: u64,
    pub deploy_cost: u64,
    pub oracle_mode: OracleMode,
    pub oracle_fee: CurrencyRange,
    pub gas_price: Currency,
}

impl CostModel {
    pub fn new(
        primitives: GasPrimitives,
        oracle_mode: OracleMode,
        oracle_fee: CurrencyRange,
    ) -> Result<Self, GasError> {
        let model = Self {
            sload_cost: primitives.sload_cost,
            sstore_new_cost: primitives.sstore_new_cost,
            sstore_update_cost: primitives.sstore_update_cost,
            base_tx_cost: primitives.base_tx_cost,
            deploy_cost: primitives.deploy_cost,
            oracle_mode,
            oracle_fee,
            gas_price: primitives.gas_price,
        };
        model.validate()?;
        Ok(model)
    }

    /// The plain model of the default calibration.
    pub fn default_simple() -> Self {
        Calibration::default_shipped()
            .model(OracleMode::None)
            .expect("shipped calibration is valid")
    }

    pub fn validate(&self) -> Result<(), GasError> {
        let costs = [
            ("sload_cost", self.sload_cost),
            ("sstore_new_cost", self.sstore_new_cost),
            ("sstore_update_cost", self.sstore_update_cost),
            ("base_tx_cost", self.base_tx_cost),
            ("deploy_cost", self.deploy_cost),
        ];
        if let Some((name, _)) = costs.iter().find(|(_, v)| *v == 0) {
            return Err(GasError::InvalidModel(format!("{name} must be positive")));
        }
        if self.gas_price.is_zero() {
            return Err(GasError::InvalidModel("gas_price must be positive".into()));
        }
        if self.oracle_fee.low > self.oracle_fee.high {
            return Err(GasError::InvalidModel("oracle fee interval is reversed".into()));
        }
        let no_fee = self.oracle_fee.high.is_zero();
        match (self.oracle_mode, no_fee) {
            (OracleMode::None, false) => {
                Err(GasError::InvalidModel("simple mode cannot carry an oracle fee".into()))
            }
            (OracleMode::ProvableSim | OracleMode::ChainlinkSim, _) if self.oracle_fee.low.is_zero() => {
                Err(GasError::InvalidModel(format!("{} needs a positive oracle fee", self.oracle_mode)))
            }
            (OracleMode::ProvableSim, _) if !self.oracle_fee.is_fixed() => {
                Err(GasError::InvalidModel("provable fee must be a single amount".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn gas_for(&self, touches: StorageTouches) -> u64 {
        self.base_tx_cost
            + touches.reads * self.sload_cost
            + touches.writes_new * self.sstore_new_cost
            + touches.writes_update * self.sstore_update_cost
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Deploy,
    Rate,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GasReceipt {
    pub op_kind: OpKind,
    pub branch: Option<RateOutcome>,
    pub storage_reads: u64,
    pub storage_writes_new: u64,
    pub storage_writes_update: u64,
    pub gas_used: u64,
    /// Fixed for the simple and provable variants; an interval for chainlink.
    pub currency_cost: CurrencyRange,
}

pub fn meter_rate(model: &CostModel, outcome: RateOutcome, touches: StorageTouches) -> GasReceipt {
    let gas_used = model.gas_for(touches);
    let execution = Currency::for_gas(gas_used, model.gas_price);
    GasReceipt {
        op_kind: OpKind::Rate,
        branch: Some(outcome),
        storage_reads: touches.reads,
        storage_writes_new: touches.writes_new,
        storage_writes_update: touches.writes_update,
        gas_used,
        currency_cost: model.oracle_fee.shifted(execution),
    }
}

pub fn meter_deploy(model: &CostModel) -> GasReceipt {
    GasReceipt {
        op_kind: OpKind::Deploy,
        branch: None,
        storage_reads: 0,
        storage_writes_new: 0,
        storage_writes_update: 0,
        gas_used: model.deploy_cost,
        currency_cost: CurrencyRange::fixed(Currency::for_gas(model.deploy_cost, model.gas_price)),
    }
}

/// Mode-independent gas primitives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GasPrimitives {
    pub sload_cost: u64,
    pub sstore_new_cost: u64,
    pub sstore_update_cost: u64,
    pub base_tx_cost: u64,
    pub deploy_cost: u64,
    pub gas_price: Currency,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeeSpec {
    Fixed(Currency),
    Range([Currency; 2]),
}

impl FeeSpec {
    fn range(&self) -> CurrencyRange {
        match self {
            FeeSpec::Fixed(c) => CurrencyRange::fixed(*c),
            FeeSpec::Range([low, high]) => CurrencyRange { low: *low, high: *high },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleFees {
    pub provable: FeeSpec,
    pub chainlink: FeeSpec,
}

/// Contents of a calibration file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Calibration {
    #[serde(flatten)]
    pub primitives: GasPrimitives,
    /// Branch whose cost is reported as "the" rating cost.
    #[serde(default = "default_report_branch", with = "branch_name")]
    pub report_branch: RateOutcome,
    pub oracle_fees: OracleFees,
}

fn default_report_branch() -> RateOutcome {
    RateOutcome::NewResource
}

mod branch_name {
    use super::RateOutcome;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &RateOutcome, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(b.as_str())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<RateOutcome, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

impl Calibration {
    pub fn default_shipped() -> Self {
        Self::parse(DEFAULT_CALIBRATION).expect("shipped calibration parses")
    }

    pub fn parse(text: &str) -> Result<Self, GasError> {
        let calibration: Calibration = toml::from_str(text)?;
        for mode in OracleMode::ALL {
            calibration.model(mode)?;
        }
        Ok(calibration)
    }

    pub fn load(path: &Path) -> Result<Self, GasError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn model(&self, mode: OracleMode) -> Result<CostModel, GasError> {
        let fee = match mode {
            OracleMode::None => CurrencyRange::default(),
            OracleMode::ProvableSim => self.oracle_fees.provable.range(),
            OracleMode::ChainlinkSim => self.oracle_fees.chainlink.range(),
        };
        CostModel::new(self.primitives, mode, fee)
    }

    pub fn models(&self) -> Result<Vec<CostModel>, GasError> {
        OracleMode::ALL.into_iter().map(|m| self.model(m)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRow {
    pub mode: OracleMode,
    pub deployment: Currency,
    pub rating: CurrencyRange,
    pub deploy_gas: u64,
    pub rating_gas: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    pub branch: RateOutcome,
    pub rows: Vec<ReportRow>,
}

/// Deployment and per-rating cost for each model, the rating priced on
/// `branch`.
pub fn cost_report(models: &[CostModel], branch: RateOutcome) -> CostReport {
    let rows = models
        .iter()
        .map(|m| {
            let deploy = meter_deploy(m);
            let rating = meter_rate(m, branch, branch.storage_touches());
            ReportRow {
                mode: m.oracle_mode,
                deployment: deploy.currency_cost.low,
                rating: rating.currency_cost,
                deploy_gas: deploy.gas_used,
                rating_gas: rating.gas_used,
            }
        })
        .collect();
    CostReport { branch, rows }
}

impl CostReport {
    pub fn row(&self, mode: OracleMode) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.mode == mode)
    }

    pub fn render_text(&self) -> String {
        let header = ["Contract version", "Deployment", "Rating operation"];
        let body: Vec<[String; 3]> = self
            .rows
            .iter()
            .map(|r| [r.mode.label().to_string(), r.deployment.to_string(), r.rating.to_string()])
            .collect();
        let mut widths = header.map(str::len);
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |cells: [&str; 3]| {
            format!("| {:<w0$} | {:>w1$} | {:>w2$} |\n", cells[0], cells[1], cells[2], w0 = widths[0], w1 = widths[1], w2 = widths[2])
        };
        let rule = format!("+{}+{}+{}+\n", "-".repeat(widths[0] + 2), "-".repeat(widths[1] + 2), "-".repeat(widths[2] + 2));
        let mut out = String::new();
        out.push_str(&rule);
        out.push_str(&line(header));
        out.push_str(&rule);
        for row in &body {
            out.push_str(&line([&row[0], &row[1], &row[2]]));
        }
        out.push_str(&rule);
        out.push_str(&format!(
            "currency units; model-calibrated, rating priced on the {} branch\n",
            self.branch
        ));
        out
    }

    /// One JSON object per row.
    pub fn render_jsonl(&self) -> String {
        self.rows
            .iter()
            .map(|r| {
                let value = serde_json::json!({
                    "mode": r.mode.key(),
                    "deployment": r.deployment.to_string(),
                    "rating_min": r.rating.low.to_string(),
                    "rating_max": r.rating.high.to_string(),
                    "deploy_gas": r.deploy_gas,
                    "rating_gas": r.rating_gas,
                    "branch": self.branch.as_str(),
                });
                format!("{value}\n")
            })
            .collect()
    }
}
