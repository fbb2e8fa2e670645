//! Data-buffer state machine and per-slot link selection.

use std::collections::VecDeque;
use std::io::Write;

use thiserror::Error;

use crate::real::Real;
use crate::swipt::{EnergyLedgerEntry, HarvestReport};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinkError {
    #[error("S->R reception on a full buffer (capacity {0})")]
    Overflow(usize),
    #[error("R->D transmission from an empty buffer")]
    Underflow,
    #[error("S->R reception without a packet")]
    MissingPacket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    SrReceive,
    RdTransmit,
    Silent,
}

/// Which table row produced the decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cause {
    BufferFull,
    BufferEmpty,
    EnergyCompare,
    Shortage,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::SrReceive => "sr_receive",
            Action::RdTransmit => "rd_transmit",
            Action::Silent => "silent",
        }
    }
}

impl Cause {
    pub fn as_str(self) -> &'static str {
        match self {
            Cause::BufferFull => "buffer_full",
            Cause::BufferEmpty => "buffer_empty",
            Cause::EnergyCompare => "energy_compare",
            Cause::Shortage => "shortage",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkDecision {
    pub action: Action,
    pub cause: Cause,
}

impl LinkDecision {
    fn new(action: Action, cause: Cause) -> Self {
        Self { action, cause }
    }
}

/// A packet held at the relay.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketRecord {
    pub id: u64,
    pub source_bits: Vec<u8>,
    pub decoded_bits: Vec<u8>,
    pub arrival_slot: u64,
    pub ledger: EnergyLedgerEntry<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BufferState {
    capacity: usize,
    queue: VecDeque<PacketRecord>,
}

impl BufferState {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "buffer capacity must be at least 1");
        Self { capacity, queue: VecDeque::with_capacity(capacity) }
    }

    pub fn occupancy(&self) -> usize {
        self.queue.len()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.queue.len() == self.capacity
    }

    pub fn head(&self) -> Option<&PacketRecord> {
        self.queue.front()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PacketRecord> {
        self.queue.iter()
    }
}

fn receive_or_shortage<T: Real>(report: &HarvestReport<T>, cause: Cause) -> LinkDecision {
    if report.decodable() {
        LinkDecision::new(Action::SrReceive, cause)
    } else {
        LinkDecision::new(Action::Silent, Cause::Shortage)
    }
}

fn table1(occupancy: usize, capacity: usize, sr_wins: bool, report: &HarvestReport<impl Real>) -> LinkDecision {
    if occupancy >= capacity {
        LinkDecision::new(Action::RdTransmit, Cause::BufferFull)
    } else if occupancy == 0 {
        receive_or_shortage(report, Cause::BufferEmpty)
    } else if sr_wins {
        receive_or_shortage(report, Cause::EnergyCompare)
    } else {
        LinkDecision::new(Action::RdTransmit, Cause::EnergyCompare)
    }
}

fn table2(occupancy: usize, capacity: usize, sr_wins: bool, report: &HarvestReport<impl Real>) -> LinkDecision {
    if sr_wins {
        if occupancy >= capacity {
            LinkDecision::new(Action::Silent, Cause::BufferFull)
        } else {
            receive_or_shortage(report, Cause::EnergyCompare)
        }
    } else if occupancy == 0 {
        LinkDecision::new(Action::Silent, Cause::BufferEmpty)
    } else {
        LinkDecision::new(Action::RdTransmit, Cause::EnergyCompare)
    }
}

/// Forced transmission at the buffer boundaries.
pub fn decide_protocol1<T: Real>(buffer: &BufferState, report: &HarvestReport<T>, delta: T) -> LinkDecision {
    let sr_wins = report.p_sr_eh >= delta * report.p_dr_eh;
    table1(buffer.occupancy(), buffer.capacity(), sr_wins, report)
}

/// Silent when the preferred link cannot be used.
pub fn decide_protocol2<T: Real>(buffer: &BufferState, report: &HarvestReport<T>, delta: T) -> LinkDecision {
    let sr_wins = report.p_sr_eh >= delta * report.p_dr_eh;
    table2(buffer.occupancy(), buffer.capacity(), sr_wins, report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SnrVariant {
    Table1,
    Table2,
}

/// Same tables with γ_SR ≥ δ·γ_RD as the comparison; shortage still judged
/// on harvested energy.
pub fn decide_snr_baseline<T: Real>(
    buffer: &BufferState,
    report: &HarvestReport<T>,
    gamma_sr: T,
    gamma_rd: T,
    delta: T,
    variant: SnrVariant,
) -> LinkDecision {
    let sr_wins = gamma_sr >= delta * gamma_rd;
    match variant {
        SnrVariant::Table1 => table1(buffer.occupancy(), buffer.capacity(), sr_wins, report),
        SnrVariant::Table2 => table2(buffer.occupancy(), buffer.capacity(), sr_wins, report),
    }
}

/// Applies a decision; returns the forwarded packet on R→D.
pub fn apply_decision(
    buffer: &mut BufferState,
    decision: LinkDecision,
    packet_in: Option<PacketRecord>,
) -> Result<Option<PacketRecord>, LinkError> {
    match decision.action {
        Action::SrReceive => {
            if buffer.is_full() {
                return Err(LinkError::Overflow(buffer.capacity));
            }
            let p = packet_in.ok_or(LinkError::MissingPacket)?;
            buffer.queue.push_back(p);
            Ok(None)
        }
        Action::RdTransmit => buffer.queue.pop_front().map(Some).ok_or(LinkError::Underflow),
        Action::Silent => Ok(None),
    }
}

/// One row of a decision trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRow {
    pub slot: u64,
    pub occupancy: usize,
    pub action: Action,
    pub cause: Cause,
}

/// Writes a trace as CSV with header `slot,phi,action,cause`.
pub fn write_trace_csv<W: Write>(out: W, rows: &[TraceRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slot", "phi", "action", "cause"])?;
    for r in rows {
        w.write_record([
            r.slot.to_string(),
            r.occupancy.to_string(),
            r.action.as_str().into(),
            r.cause.as_str().into(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn packet(id: u64) -> PacketRecord {
        PacketRecord {
            id,
            source_bits: vec![1, 0],
            decoded_bits: vec![1, 0],
            arrival_slot: id,
            ledger: EnergyLedgerEntry::new(id, 0.1).unwrap(),
        }
    }

    fn buffer(occ: usize, cap: usize) -> BufferState {
        let mut b = BufferState::new(cap);
        for i in 0..occ {
            b.queue.push_back(packet(i as u64));
        }
        b
    }

    fn report(sr: f64, dr: f64, pi: f64) -> HarvestReport<f64> {
        HarvestReport::new(sr, dr, pi)
    }

    #[test]
    fn table1_rows() {
        let d = decide_protocol1(&buffer(10, 10), &report(5.0, 0.0, 0.01), 1.05);
        assert_eq!(d, LinkDecision::new(Action::RdTransmit, Cause::BufferFull));
        let d = decide_protocol1(&buffer(0, 10), &report(0.005, 0.0, 0.01), 1.05);
        assert_eq!(d.action, Action::Silent);
        let d = decide_protocol1(&buffer(0, 10), &report(0.02, 5.0, 0.01), 1.05);
        assert_eq!(d, LinkDecision::new(Action::SrReceive, Cause::BufferEmpty));
        let d = decide_protocol1(&buffer(3, 10), &report(0.2, 0.1, 0.01), 1.05);
        assert_eq!(d.action, Action::SrReceive);
        let d = decide_protocol1(&buffer(3, 10), &report(0.1, 0.2, 0.01), 1.05);
        assert_eq!(d.action, Action::RdTransmit);
        // equality with the decoding cost is a shortage
        let d = decide_protocol1(&buffer(3, 10), &report(0.01, 0.0, 0.01), 1.05);
        assert_eq!(d, LinkDecision::new(Action::Silent, Cause::Shortage));
    }

    #[test]
    fn table2_rows() {
        let d = decide_protocol2(&buffer(0, 10), &report(0.1, 0.2, 0.01), 1.05);
        assert_eq!(d, LinkDecision::new(Action::Silent, Cause::BufferEmpty));
        let d = decide_protocol2(&buffer(10, 10), &report(0.3, 0.2, 0.01), 1.05);
        assert_eq!(d, LinkDecision::new(Action::Silent, Cause::BufferFull));
        let d = decide_protocol2(&buffer(5, 10), &report(0.1, 0.2, 0.01), 1.05);
        assert_eq!(d.action, Action::RdTransmit);
        let d = decide_protocol2(&buffer(5, 10), &report(0.3, 0.2, 0.01), 1.05);
        assert_eq!(d.action, Action::SrReceive);
        let d = decide_protocol2(&buffer(10, 10), &report(0.1, 0.2, 0.01), 1.05);
        assert_eq!(d.action, Action::RdTransmit);
    }

    #[test]
    fn snr_rows() {
        let r = report(0.3, 0.3, 0.01);
        let d = decide_snr_baseline(&buffer(10, 10), &r, 5.0, 1.0, 1.0, SnrVariant::Table1);
        assert_eq!(d.action, Action::RdTransmit);
        let d = decide_snr_baseline(&buffer(4, 10), &r, 2.0, 1.0, 1.0, SnrVariant::Table1);
        assert_eq!(d.action, Action::SrReceive);
        let d = decide_snr_baseline(&buffer(4, 10), &r, 1.0, 1.0, 1.0, SnrVariant::Table2);
        assert_eq!(d.action, Action::SrReceive);
        let d = decide_snr_baseline(&buffer(4, 10), &report(0.001, 0.3, 0.01), 2.0, 1.0, 1.0, SnrVariant::Table2);
        assert_eq!(d.action, Action::Silent);
    }

    #[test]
    fn apply_rows() {
        let mut b = buffer(0, 2);
        let rx = LinkDecision::new(Action::SrReceive, Cause::BufferEmpty);
        apply_decision(&mut b, rx, Some(packet(7))).unwrap();
        assert_eq!(b.occupancy(), 1);
        let mut f = buffer(2, 2);
        let out = apply_decision(&mut f, LinkDecision::new(Action::RdTransmit, Cause::BufferFull), None).unwrap();
        assert_eq!(out.unwrap().id, 0);
        assert_eq!(f.occupancy(), 1);
        let s = apply_decision(&mut f, LinkDecision::new(Action::Silent, Cause::Shortage), None).unwrap();
        assert!(s.is_none());
        assert_eq!(f.occupancy(), 1);
        let mut full = buffer(2, 2);
        assert_eq!(apply_decision(&mut full, rx, Some(packet(9))), Err(LinkError::Overflow(2)));
        let mut empty = buffer(0, 2);
        let tx = LinkDecision::new(Action::RdTransmit, Cause::EnergyCompare);
        assert_eq!(apply_decision(&mut empty, tx, None), Err(LinkError::Underflow));
    }

    #[test]
    fn fifo_order() {
        let mut b = buffer(0, 5);
        let rx = LinkDecision::new(Action::SrReceive, Cause::EnergyCompare);
        let tx = LinkDecision::new(Action::RdTransmit, Cause::EnergyCompare);
        for i in 0..4 {
            apply_decision(&mut b, rx, Some(packet(i))).unwrap();
        }
        let ids: Vec<u64> = (0..4).map(|_| apply_decision(&mut b, tx, None).unwrap().unwrap().id).collect();
        assert_eq!(ids, vec![0, 1, 2, 3]);
    }

    #[test]
    fn trace_csv() {
        let rows = [
            TraceRow { slot: 0, occupancy: 0, action: Action::SrReceive, cause: Cause::BufferEmpty },
            TraceRow { slot: 1, occupancy: 1, action: Action::Silent, cause: Cause::Shortage },
        ];
        let mut out = Vec::new();
        write_trace_csv(&mut out, &rows).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "slot,phi,action,cause\n0,0,sr_receive,buffer_empty\n1,1,silent,shortage\n");
    }
}
