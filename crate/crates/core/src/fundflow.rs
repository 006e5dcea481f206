//! Fund-flow analysis: net asset deltas per account, beneficiary
//! identification, and profit-oracle synthesis.
//!
//! Token movements come from Transfer/Deposit/Withdrawal events matched by
//! canonical topic hashes; native movements from value-carrying opcodes.
//! Deltas are signed and event-derived — the synthesized PoC's runtime
//! assertions are the ground truth at validation time.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_bigint::Sign;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::{word_to_be_bytes, Address, H256, U256};
use crate::trace::TraceStream;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("no address nets a positive delta in any asset")]
    NoBeneficiary,
}

/// keccak("Transfer(address,address,uint256)")
pub const TOPIC_TRANSFER: [u8; 32] = [
    0xdd, 0xf2, 0x52, 0xad, 0x1b, 0xe2, 0xc8, 0x9b, 0x69, 0xc2, 0xb0, 0x68, 0xfc, 0x37, 0x8d,
    0xaa, 0x95, 0x2b, 0xa7, 0xf1, 0x63, 0xc4, 0xa1, 0x16, 0x28, 0xf5, 0x5a, 0x4d, 0xf5, 0x23,
    0xb3, 0xef,
];
/// keccak("Deposit(address,uint256)")
pub const TOPIC_DEPOSIT: [u8; 32] = [
    0xe1, 0xff, 0xfc, 0xc4, 0x92, 0x3d, 0x04, 0xb5, 0x59, 0xf4, 0xd2, 0x9a, 0x8b, 0xfc, 0x6c,
    0xda, 0x04, 0xeb, 0x5b, 0x0d, 0x3c, 0x46, 0x07, 0x51, 0xc2, 0x40, 0x2c, 0x5c, 0x5c, 0xc9,
    0x10, 0x9c,
];
/// keccak("Withdrawal(address,uint256)")
pub const TOPIC_WITHDRAWAL: [u8; 32] = [
    0x7f, 0xcf, 0x53, 0x2c, 0x15, 0xf0, 0xa6, 0xdb, 0x0b, 0xd6, 0xd0, 0xe0, 0x38, 0xbe, 0xa7,
    0x1d, 0x30, 0xd8, 0x08, 0xc7, 0xd9, 0x8c, 0xb3, 0xbf, 0x72, 0x68, 0xa9, 0x5b, 0xf5, 0x08,
    0x1b, 0x65,
];

/// Asset identity: the chain's native unit or an ERC-20 token address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Asset {
    Native,
    Token(Address),
}

impl Asset {
    pub fn label(&self, tokens: &crate::databases::TokenDb) -> String {
        match self {
            Asset::Native => "NATIVE".to_string(),
            Asset::Token(a) => tokens.alias_of(a),
        }
    }
}

/// Net balance change of one account in one asset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetDelta {
    pub account: Address,
    pub asset: Asset,
    /// Signed amount in the asset's base units; never zero.
    pub delta: BigInt,
}

/// Profit oracle: which balances the PoC must grow, and the minimum native
/// funding the attacker needs up front.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleSpec {
    pub beneficiary: Address,
    /// (asset, expected positive delta, observed magnitude).
    pub assets: Vec<(Asset, bool, BigInt)>,
    /// Native amount the attacker must hold pre-attack, in wei.
    pub min_funding: U256,
}

/// Ranking used to compare gains across assets without price feeds.
#[derive(Debug, Clone, Default)]
pub struct AssetPriority {
    /// Wrapped-native token addresses (rank just below native).
    pub wrapped_native: Vec<Address>,
    /// Configured stablecoins (rank below wrapped native).
    pub stables: Vec<Address>,
}

impl AssetPriority {
    /// Lower rank = higher priority.
    pub fn rank(&self, asset: &Asset) -> usize {
        match asset {
            Asset::Native => 0,
            Asset::Token(a) => {
                if self.wrapped_native.contains(a) {
                    1
                } else if self.stables.contains(a) {
                    2
                } else {
                    3
                }
            }
        }
    }
}

fn u256_to_bigint(v: &U256) -> BigInt {
    BigInt::from_bytes_be(Sign::Plus, &word_to_be_bytes(v))
}

fn topic_address(t: &H256) -> Address {
    Address::from_slice(&t.as_bytes()[12..])
}

/// Outcome of folding all events and native transfers into per-account,
/// per-asset net deltas. Malformed logs are skipped and counted.
#[derive(Debug, Clone, Default)]
pub struct FundFlow {
    pub deltas: Vec<AssetDelta>,
    pub skipped_logs: usize,
}

/// Fold Transfer/Deposit/Withdrawal events and native value transfers into
/// net deltas; zero nets are dropped. Mints and burns (zero-address
/// counterparty) adjust only the non-zero side.
pub fn extract_fund_flow(stream: &TraceStream) -> FundFlow {
    let mut acc: BTreeMap<(Address, Asset), BigInt> = BTreeMap::new();
    let mut skipped = 0usize;
    let zero = Address::zero();

    let mut add = |account: Address, asset: Asset, amount: BigInt| {
        if account == zero {
            return;
        }
        *acc.entry((account, asset)).or_default() += amount;
    };

    for log in &stream.logs {
        let Some(topic0) = log.topics.first() else {
            skipped += 1;
            continue;
        };
        let asset = Asset::Token(log.emitter);
        if topic0.as_bytes() == TOPIC_TRANSFER {
            if log.topics.len() != 3 || log.data.len() < 32 {
                skipped += 1;
                continue;
            }
            let from = topic_address(&log.topics[1]);
            let to = topic_address(&log.topics[2]);
            let amount = BigInt::from_bytes_be(Sign::Plus, &log.data[..32]);
            add(from, asset, -amount.clone());
            add(to, asset, amount);
        } else if topic0.as_bytes() == TOPIC_DEPOSIT {
            if log.topics.len() != 2 || log.data.len() < 32 {
                skipped += 1;
                continue;
            }
            let dst = topic_address(&log.topics[1]);
            let amount = BigInt::from_bytes_be(Sign::Plus, &log.data[..32]);
            add(dst, asset, amount);
        } else if topic0.as_bytes() == TOPIC_WITHDRAWAL {
            if log.topics.len() != 2 || log.data.len() < 32 {
                skipped += 1;
                continue;
            }
            let src = topic_address(&log.topics[1]);
            let amount = BigInt::from_bytes_be(Sign::Plus, &log.data[..32]);
            add(src, asset, -amount);
        }
    }

    for t in &stream.value_transfers {
        let amount = u256_to_bigint(&t.amount_wei);
        add(t.from, Asset::Native, -amount.clone());
        add(t.to, Asset::Native, amount);
    }

    let deltas = acc
        .into_iter()
        .filter(|(_, d)| d.sign() != num_bigint::Sign::NoSign)
        .map(|((account, asset), delta)| AssetDelta {
            account,
            asset,
            delta,
        })
        .collect();
    FundFlow {
        deltas,
        skipped_logs: skipped,
    }
}

/// Best positive gain of one account: (priority rank, magnitude), or `None`
/// when nothing is positive.
fn best_gain<'a>(
    deltas: &'a [AssetDelta],
    account: &Address,
    prio: &AssetPriority,
) -> Option<(usize, &'a BigInt)> {
    deltas
        .iter()
        .filter(|d| d.account == *account && d.delta.sign() == Sign::Plus)
        .map(|d| (prio.rank(&d.asset), &d.delta))
        .min_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(a.1)))
}

/// The presumed beneficiary: the sender or attack contract when either nets
/// a positive priority-ranked gain, otherwise the address maximizing the
/// ranked net gain over all assets.
pub fn identify_beneficiary(
    deltas: &[AssetDelta],
    sender: Address,
    attack_contract: Address,
    prio: &AssetPriority,
) -> Result<Address, FlowError> {
    let sender_gain = best_gain(deltas, &sender, prio);
    let contract_gain = best_gain(deltas, &attack_contract, prio);
    match (sender_gain, contract_gain) {
        (Some(s), Some(c)) => {
            // smaller rank wins; magnitude breaks ties
            if c.0 < s.0 || (c.0 == s.0 && c.1 > s.1) {
                return Ok(attack_contract);
            }
            return Ok(sender);
        }
        (Some(_), None) => return Ok(sender),
        (None, Some(_)) => return Ok(attack_contract),
        (None, None) => {}
    }
    let mut accounts: Vec<Address> = deltas.iter().map(|d| d.account).collect();
    accounts.sort();
    accounts.dedup();
    accounts
        .into_iter()
        .filter_map(|a| best_gain(deltas, &a, prio).map(|(rank, mag)| (a, rank, mag.clone())))
        .min_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2)))
        .map(|(a, _, _)| a)
        .ok_or(FlowError::NoBeneficiary)
}

/// One balance-increase assertion per beneficiary-positive asset;
/// min_funding is the peak cumulative native outflow of the sender, floored
/// at `funding_floor`.
pub fn synthesize_oracles(
    deltas: &[AssetDelta],
    beneficiary: Address,
    stream: &TraceStream,
    funding_floor: U256,
) -> OracleSpec {
    let assets: Vec<(Asset, bool, BigInt)> = deltas
        .iter()
        .filter(|d| d.account == beneficiary && d.delta.sign() == Sign::Plus)
        .map(|d| (d.asset, true, d.delta.clone()))
        .collect();

    // running balance of the sender across the native transfer sequence;
    // min_funding covers the deepest dip
    let mut running = BigInt::from(0);
    let mut low = BigInt::from(0);
    for t in &stream.value_transfers {
        let amount = u256_to_bigint(&t.amount_wei);
        if t.from == stream.sender {
            running -= &amount;
        }
        if t.to == stream.sender {
            running += &amount;
        }
        if running < low {
            low = running.clone();
        }
    }
    let dip = -low;
    let dip_u256 = {
        let (_, bytes) = dip.to_bytes_be();
        if bytes.len() > 32 {
            U256::MAX
        } else {
            U256::from_big_endian(&bytes)
        }
    };
    let min_funding = dip_u256.max(funding_floor);

    OracleSpec {
        beneficiary,
        assets,
        min_funding,
    }
}

#[cfg(test)]
mod tests;
