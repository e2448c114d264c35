//! Day-by-day execution of the trading strategy against a price series,
//! with portfolio accounting, policy updates and benchmark strategies.
//!
//! Each day at the close: buy the current bin's allocation when flat and
//! the allocation is positive, sell everything when the predicted return
//! is negative, otherwise do nothing. Completed buy-sell cycles feed the
//! per-bin price-difference sums that drive allocation updates, and every
//! new predicted return grows the cutoff window.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::market_data::{DateRange, PriceSeries};
use crate::policy::{
    optimal_allocations, record_trade_outcome, snapshot, Allocation, AllocationPolicy,
    PolicyConfig, SnapshotRow,
};
use crate::predictor::PredictionRecord;

/// When an order decided after day t's close is filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionTiming {
    /// Fill at the next trading day's close (no intraday information).
    #[default]
    NextClose,
    /// Fill at the signal day's own close.
    SameClose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Buy,
    Sell,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Buy => write!(f, "BUY"),
            Side::Sell => write!(f, "SELL"),
        }
    }
}

/// One executed trade. `bin` is the entry bin on buys and 1 on sells;
/// `realized_pnl` is set on sells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeEvent {
    pub date: NaiveDate,
    pub side: Side,
    pub units: u64,
    pub price: f64,
    pub bin: usize,
    pub realized_pnl: f64,
}

/// Open position details while holding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryInfo {
    pub bin: usize,
    pub price: f64,
    pub date: NaiveDate,
}

/// Cash and holdings. `units > 0` exactly when `entry` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioState {
    pub cash: f64,
    pub units: u64,
    pub entry: Option<EntryInfo>,
}

impl PortfolioState {
    pub fn new(cash: f64) -> PortfolioState {
        PortfolioState {
            cash,
            units: 0,
            entry: None,
        }
    }

    pub fn holding(&self) -> bool {
        self.units > 0
    }

    pub fn equity(&self, price: f64) -> f64 {
        self.cash + self.units as f64 * price
    }
}

/// Daily mark-to-market value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquityPoint {
    pub date: NaiveDate,
    pub equity: f64,
}

/// What the strategy decided at a close; filled now or next close
/// depending on the timing mode.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Order {
    SellAll,
    Buy { units: u64, bin: usize },
}

/// Applies Def.-2 to the current state: returns the order implied by the
/// classified bin, without executing it.
fn decide(state: &PortfolioState, policy: &AllocationPolicy, r_hat: f64) -> Option<Order> {
    let bin = policy.classify(r_hat);
    match policy.allocations[bin - 1] {
        Allocation::Sell if state.holding() => Some(Order::SellAll),
        Allocation::Units(a) if a > 0 && !state.holding() => Some(Order::Buy { units: a, bin }),
        _ => None,
    }
}

/// Fills an order at `price`, updating the portfolio. Cash-constrained
/// buys fill the maximum affordable whole units; the second tuple field
/// reports that shortfall.
fn execute(
    state: &mut PortfolioState,
    order: Order,
    price: f64,
    date: NaiveDate,
) -> (Option<TradeEvent>, bool) {
    match order {
        Order::SellAll => {
            if !state.holding() {
                return (None, false);
            }
            let entry = state.entry.expect("holding implies entry");
            let units = state.units;
            let pnl = units as f64 * (price - entry.price);
            state.cash += units as f64 * price;
            state.units = 0;
            state.entry = None;
            (
                Some(TradeEvent {
                    date,
                    side: Side::Sell,
                    units,
                    price,
                    bin: 1,
                    realized_pnl: pnl,
                }),
                false,
            )
        }
        Order::Buy { units, bin } => {
            if state.holding() {
                return (None, false);
            }
            let affordable = crate::util::floor_units(state.cash, price);
            let filled = units.min(affordable);
            if filled == 0 {
                return (None, true);
            }
            state.cash -= filled as f64 * price;
            state.units = filled;
            state.entry = Some(EntryInfo {
                bin,
                price,
                date,
            });
            (
                Some(TradeEvent {
                    date,
                    side: Side::Buy,
                    units: filled,
                    price,
                    bin,
                    realized_pnl: 0.0,
                }),
                filled < units,
            )
        }
    }
}

/// One same-day-close strategy step: classify the predicted return, then
/// buy/sell/hold per the allocation policy at `exec_price`.
pub fn step(
    state: &mut PortfolioState,
    policy: &AllocationPolicy,
    r_hat: f64,
    exec_price: f64,
    date: NaiveDate,
) -> Result<Option<TradeEvent>> {
    if !(exec_price.is_finite() && exec_price > 0.0) {
        return Err(Error::Config(format!("non-positive price {exec_price}")));
    }
    match decide(state, policy, r_hat) {
        Some(order) => Ok(execute(state, order, exec_price, date).0),
        None => Ok(None),
    }
}

/// Inputs to a full backtest run.
pub struct BacktestInput<'a> {
    /// Series the predictions refer to.
    pub signal_series: &'a PriceSeries,
    /// Optional separately-traded series (e.g. an ETF tracking the index);
    /// execution prices, equity marks and cycle sums come from it.
    pub traded_series: Option<&'a PriceSeries>,
    pub predictions: &'a [PredictionRecord],
    pub range: DateRange,
    /// Initial policy (cutoffs, allocations, seeded stats and the
    /// bootstrap return history behind the cutoffs).
    pub policy: AllocationPolicy,
    pub policy_config: PolicyConfig,
    pub initial_cash: f64,
    pub timing: ExecutionTiming,
    /// Record a policy snapshot for every evaluation day.
    pub record_snapshots: bool,
}

/// A policy snapshot taken at a day's close.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatedSnapshot {
    pub date: NaiveDate,
    pub rows: Vec<SnapshotRow>,
}

/// Backtest artifacts.
#[derive(Debug)]
pub struct BacktestOutput {
    pub trades: Vec<TradeEvent>,
    pub equity: Vec<EquityPoint>,
    pub policy: AllocationPolicy,
    /// Net realized profit (sum of sell-side PnL).
    pub g: f64,
    pub snapshots: Vec<DatedSnapshot>,
    pub warnings: Vec<String>,
}

/// Runs the strategy day by day over the evaluation range.
///
/// Order of events at each close: fill any order pending from the previous
/// close (next-close mode), process the day's predicted return into a new
/// order, append the return to the growing cutoff window, and mark equity.
/// Sales feed the per-bin sums and re-evaluate that bin's allocation.
pub fn run_backtest(input: BacktestInput<'_>) -> Result<BacktestOutput> {
    input.policy_config.validate()?;
    if !(input.initial_cash.is_finite() && input.initial_cash > 0.0) {
        return Err(Error::Config("initial cash must be positive".into()));
    }
    let exec_series = input.traded_series.unwrap_or(input.signal_series);
    let exec_days = exec_series.indices_in(&input.range);
    if exec_days.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no trading days in {} .. {}",
            input.range.start, input.range.end
        )));
    }
    if input.traded_series.is_some() {
        let signal_dates: Vec<NaiveDate> = input
            .signal_series
            .indices_in(&input.range)
            .iter()
            .map(|&i| input.signal_series.bars[i].date)
            .collect();
        let traded_dates: Vec<NaiveDate> =
            exec_days.iter().map(|&i| exec_series.bars[i].date).collect();
        if signal_dates != traded_dates {
            return Err(Error::DateMisalignment(format!(
                "{} signal days vs {} traded days in range",
                signal_dates.len(),
                traded_dates.len()
            )));
        }
    }

    let r_hat_by_date: HashMap<NaiveDate, f64> = input
        .predictions
        .iter()
        .map(|r| (r.date, r.r_hat))
        .collect();

    let mut policy = input.policy;
    let mut state = PortfolioState::new(input.initial_cash);
    let mut trades = Vec::new();
    let mut equity = Vec::with_capacity(exec_days.len());
    let mut snapshots = Vec::new();
    let mut warnings = Vec::new();
    let mut pending: Option<Order> = None;
    let mut g = 0.0;

    let handle_event = |event: Option<TradeEvent>,
                            shortfall: bool,
                            policy: &mut AllocationPolicy,
                            trades: &mut Vec<TradeEvent>,
                            warnings: &mut Vec<String>,
                            g: &mut f64,
                            entry_before: Option<EntryInfo>|
     -> Result<()> {
        if shortfall {
            warnings.push(match &event {
                Some(e) => format!("{}: cash covered only {} units", e.date, e.units),
                None => "buy skipped: cash cannot cover a single unit".to_string(),
            });
        }
        if let Some(event) = event {
            if event.side == Side::Sell {
                let entry = entry_before.expect("sell implies an entry");
                *g += event.realized_pnl;
                let flipped = record_trade_outcome(
                    &mut policy.stats,
                    entry.bin,
                    entry.price,
                    event.price,
                    input.policy_config.epsilon,
                )?;
                if input.policy_config.adapt_allocations && flipped {
                    let refreshed = optimal_allocations(&policy.stats, &input.policy_config);
                    policy.allocations[entry.bin - 1] = refreshed[entry.bin - 1];
                }
            }
            trades.push(event);
        }
        Ok(())
    };

    for &idx in &exec_days {
        let bar = &exec_series.bars[idx];
        let price = bar.adj_close;

        // 1. Fill the order decided at the previous close.
        if let Some(order) = pending.take() {
            let entry_before = state.entry;
            let (event, shortfall) = execute(&mut state, order, price, bar.date);
            handle_event(
                event,
                shortfall,
                &mut policy,
                &mut trades,
                &mut warnings,
                &mut g,
                entry_before,
            )?;
        }

        // 2. Process the day's signal, if the predictor produced one.
        if let Some(&r_hat) = r_hat_by_date.get(&bar.date) {
            if let Some(order) = decide(&state, &policy, r_hat) {
                match input.timing {
                    ExecutionTiming::SameClose => {
                        let entry_before = state.entry;
                        let (event, shortfall) = execute(&mut state, order, price, bar.date);
                        handle_event(
                            event,
                            shortfall,
                            &mut policy,
                            &mut trades,
                            &mut warnings,
                            &mut g,
                            entry_before,
                        )?;
                    }
                    ExecutionTiming::NextClose => pending = Some(order),
                }
            }

            // 3. Grow the cutoff window with today's predicted return.
            if input.policy_config.adapt_cutoffs {
                policy.return_history.push(r_hat);
                // Hold the seed cutoffs until the window is large enough
                // for meaningful deciles.
                if policy.return_history.len() >= 10 {
                    policy.cutoffs =
                        crate::policy::compute_cutoffs(&policy.return_history, &input.policy_config)?;
                    if policy.cutoffs.merged {
                        warnings.push(format!("{}: tied cutoffs merged bins", bar.date));
                    }
                }
            }
        }

        // 4. Mark to market.
        equity.push(EquityPoint {
            date: bar.date,
            equity: state.equity(price),
        });
        if input.record_snapshots {
            snapshots.push(DatedSnapshot {
                date: bar.date,
                rows: snapshot(&policy),
            });
        }
    }

    if pending.is_some() {
        warnings.push("signal on final day had no next close to execute at".into());
    }

    Ok(BacktestOutput {
        trades,
        equity,
        policy,
        g,
        snapshots,
        warnings,
    })
}

/// Buys as many whole units as the capital allows on the first day of the
/// range and holds to the end. Returns the trade log (one buy, when
/// affordable), the equity curve and the cumulative return.
pub fn buy_and_hold(
    series: &PriceSeries,
    range: &DateRange,
    capital: f64,
) -> Result<(Vec<TradeEvent>, Vec<EquityPoint>, f64)> {
    let days = series.indices_in(range);
    if days.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no trading days in {} .. {}",
            range.start, range.end
        )));
    }
    let first = &series.bars[days[0]];
    let units = crate::util::floor_units(capital, first.adj_close);
    let mut trades = Vec::new();
    let mut cash = capital;
    if units > 0 {
        cash -= units as f64 * first.adj_close;
        trades.push(TradeEvent {
            date: first.date,
            side: Side::Buy,
            units,
            price: first.adj_close,
            bin: 2,
            realized_pnl: 0.0,
        });
    }
    let equity: Vec<EquityPoint> = days
        .iter()
        .map(|&i| {
            let bar = &series.bars[i];
            EquityPoint {
                date: bar.date,
                equity: cash + units as f64 * bar.adj_close,
            }
        })
        .collect();
    let cr = equity.last().expect("non-empty").equity / capital - 1.0;
    Ok((trades, equity, cr))
}

/// The classical directional strategy: buy everything when the predicted
/// price exceeds the current one, sell everything when below. Implemented
/// as the two-bin reduction of the allocation policy with adaptation off.
pub fn up_down_strategy(
    signal_series: &PriceSeries,
    traded_series: Option<&PriceSeries>,
    predictions: &[PredictionRecord],
    range: &DateRange,
    capital: f64,
    timing: ExecutionTiming,
) -> Result<BacktestOutput> {
    let exec_series = traded_series.unwrap_or(signal_series);
    let days = exec_series.indices_in(range);
    if days.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no trading days in {} .. {}",
            range.start, range.end
        )));
    }
    let start_price = exec_series.bars[days[0]].adj_close;
    let a_max = crate::util::floor_units(capital, start_price);
    let policy = AllocationPolicy::up_down(a_max);
    let policy_config = PolicyConfig {
        a_max: a_max.max(1),
        adapt_cutoffs: false,
        adapt_allocations: false,
        ..PolicyConfig::default()
    };
    run_backtest(BacktestInput {
        signal_series,
        traded_series,
        predictions,
        range: *range,
        policy,
        policy_config,
        initial_cash: capital,
        timing,
        record_snapshots: false,
    })
}

const TRADES_HEADER: &str = "date,side,units,price,bin,realized_pnl";
const EQUITY_HEADER: &str = "date,equity";

pub fn trades_to_csv(trades: &[TradeEvent], fingerprint: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(fp) = fingerprint {
        out.push_str(&format!("# config {fp}\n"));
    }
    out.push_str(TRADES_HEADER);
    out.push('\n');
    for t in trades {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            t.date, t.side, t.units, t.price, t.bin, t.realized_pnl
        ));
    }
    out
}

pub fn write_trades_csv(
    trades: &[TradeEvent],
    path: &Path,
    fingerprint: Option<&str>,
) -> Result<()> {
    crate::util::write_atomic(path, trades_to_csv(trades, fingerprint).as_bytes())
}

pub fn read_trades_csv(path: &Path) -> Result<Vec<TradeEvent>> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in body.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() || line == TRADES_HEADER {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let bad = |reason: String| Error::ParseRow {
            path: path.display().to_string(),
            line: idx + 1,
            reason,
        };
        if fields.len() != 6 {
            return Err(bad("expected 6 fields".into()));
        }
        out.push(TradeEvent {
            date: NaiveDate::parse_from_str(fields[0], "%Y-%m-%d")
                .map_err(|_| bad(format!("bad date {:?}", fields[0])))?,
            side: match fields[1] {
                "BUY" => Side::Buy,
                "SELL" => Side::Sell,
                other => return Err(bad(format!("bad side {other:?}"))),
            },
            units: fields[2]
                .parse()
                .map_err(|_| bad(format!("bad units {:?}", fields[2])))?,
            price: fields[3]
                .parse()
                .map_err(|_| bad(format!("bad price {:?}", fields[3])))?,
            bin: fields[4]
                .parse()
                .map_err(|_| bad(format!("bad bin {:?}", fields[4])))?,
            realized_pnl: fields[5]
                .parse()
                .map_err(|_| bad(format!("bad pnl {:?}", fields[5])))?,
        });
    }
    Ok(out)
}

pub fn equity_to_csv(equity: &[EquityPoint], fingerprint: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(fp) = fingerprint {
        out.push_str(&format!("# config {fp}\n"));
    }
    out.push_str(EQUITY_HEADER);
    out.push('\n');
    for p in equity {
        out.push_str(&format!("{},{}\n", p.date, p.equity));
    }
    out
}

pub fn write_equity_csv(
    equity: &[EquityPoint],
    path: &Path,
    fingerprint: Option<&str>,
) -> Result<()> {
    crate::util::write_atomic(path, equity_to_csv(equity, fingerprint).as_bytes())
}

pub fn read_equity_csv(path: &Path) -> Result<Vec<EquityPoint>> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in body.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() || line == EQUITY_HEADER {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let bad = |reason: String| Error::ParseRow {
            path: path.display().to_string(),
            line: idx + 1,
            reason,
        };
        if fields.len() != 2 {
            return Err(bad("expected 2 fields".into()));
        }
        out.push(EquityPoint {
            date: NaiveDate::parse_from_str(fields[0], "%Y-%m-%d")
                .map_err(|_| bad(format!("bad date {:?}", fields[0])))?,
            equity: fields[1]
                .parse()
                .map_err(|_| bad(format!("bad equity {:?}", fields[1])))?,
        });
    }
    if out.is_empty() {
        return Err(Error::NoData {
            path: path.display().to_string(),
        });
    }
    Ok(out)
}
