//! Fund balance sheets: cash, shares, loans and short-sale margin.
//!
//! Wealth is `C + S*p - L`. Margin is the part of cash set aside against a short
//! position, `M = max(0, -S)*p`; whenever free cash would fall below it the fund
//! borrows the difference, so `C >= M` and `L >= 0` hold after every operation.

use crate::strategies::StrategyParams;

#[derive(Debug, Clone, PartialEq)]
pub struct Fund {
    pub cash: f64,
    pub shares: f64,
    pub loans: f64,
    pub params: StrategyParams,
    /// Wealth at the end of the previous step, after external flows.
    pub wealth_prev: f64,
    pub alive: bool,
}

/// Outcome of one step's carry and mark-to-market.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settlement {
    /// Interest, dividends and capital gain over the step.
    pub pnl: f64,
    /// `pnl / wealth_prev`, the strategy return before investor flows.
    pub ret: f64,
    /// Deposit (positive) or withdrawal made on behalf of investors.
    pub flow: f64,
    pub wealth: f64,
}

impl Fund {
    /// A fund holding only cash.
    pub fn with_cash(params: StrategyParams, cash: f64) -> Self {
        Self {
            cash,
            shares: 0.0,
            loans: 0.0,
            params,
            wealth_prev: cash,
            alive: true,
        }
    }

    pub fn wealth(&self, p: f64) -> f64 {
        self.cash + self.shares * p - self.loans
    }

    pub fn margin(&self, p: f64) -> f64 {
        (-self.shares).max(0.0) * p
    }

    /// Realised leverage `|S| p / W`.
    pub fn leverage(&self, p: f64) -> f64 {
        self.shares.abs() * p / self.wealth(p)
    }

    /// Re-splits net cash `C - L` so that margin is covered and loans are minimal.
    fn refinance(&mut self, net_cash: f64, p: f64) {
        let margin = self.margin(p);
        if net_cash >= margin {
            self.cash = net_cash;
            self.loans = 0.0;
        } else {
            self.cash = margin;
            self.loans = margin - net_cash;
        }
    }

    pub fn apply_trade(&mut self, delta_shares: f64, p: f64) {
        debug_assert!(p > 0.0);
        if delta_shares == 0.0 {
            return;
        }
        let net = self.cash - self.loans - delta_shares * p;
        self.shares += delta_shares;
        self.refinance(net, p);
    }

    /// Pays interest on net cash and the dividend on the shares held over the
    /// step, marks to `p_new`, and adds the investor flow `(f - 1) * pnl` so that
    /// wealth changes by exactly `f * pnl`.
    pub fn accrue_and_settle(
        &mut self,
        p_new: f64,
        p_old: f64,
        dividend_per_share: f64,
        r_step: f64,
        f: f64,
    ) -> Settlement {
        let interest = r_step * (self.cash - self.loans);
        let dividends = dividend_per_share * self.shares;
        let pnl = interest + dividends + (p_new - p_old) * self.shares;
        let flow = (f - 1.0) * pnl;
        let net = self.cash - self.loans + interest + dividends + flow;
        self.refinance(net, p_new);
        let ret = pnl / self.wealth_prev;
        let wealth = self.wealth(p_new);
        self.wealth_prev = wealth;
        Settlement {
            pnl,
            ret,
            flow,
            wealth,
        }
    }

    pub fn check_solvency(&self, p: f64) -> bool {
        self.wealth(p) > 0.0
    }

    /// Deposits or withdraws cash so that wealth at `p` equals `target`.
    /// Returns the amount deposited.
    pub fn replenish_to(&mut self, target: f64, p: f64) -> f64 {
        debug_assert!(target > 0.0);
        let deposit = target - self.wealth(p);
        let net = self.cash - self.loans + deposit;
        self.refinance(net, p);
        self.wealth_prev = target;
        deposit
    }
}
