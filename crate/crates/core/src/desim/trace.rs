use std::io::Write;

use super::{Packet, PacketClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEvent {
    Arrival,
    Start,
    Departure,
}

impl TraceEvent {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceEvent::Arrival => "arrival",
            TraceEvent::Start => "start",
            TraceEvent::Departure => "departure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub time: f64,
    pub event: TraceEvent,
    pub class: PacketClass,
    pub server: Option<usize>,
    pub queue_len_short: usize,
    pub queue_len_long: usize,
}

/// Hooks into a simulation run. Both methods default to no-ops.
pub trait Observer {
    fn event(&mut self, _row: &TraceRow) {}
    fn departure(&mut self, _packet: &Packet) {}
}

pub struct NoopObserver;

impl Observer for NoopObserver {}

/// Writes every event as a CSV line:
/// `time,event,class,server,queue_len_short,queue_len_long`.
pub struct CsvTrace<W: Write> {
    out: W,
    error: Option<std::io::Error>,
}

impl<W: Write> CsvTrace<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "time,event,class,server,queue_len_short,queue_len_long")?;
        Ok(Self { out, error: None })
    }

    /// Flushes and returns the writer, or the first write error.
    pub fn finish(mut self) -> std::io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> Observer for CsvTrace<W> {
    fn event(&mut self, row: &TraceRow) {
        if self.error.is_some() {
            return;
        }
        let server = row.server.map(|s| s.to_string()).unwrap_or_default();
        if let Err(e) = writeln!(
            self.out,
            "{},{},{},{},{},{}",
            row.time,
            row.event.as_str(),
            row.class.as_str(),
            server,
            row.queue_len_short,
            row.queue_len_long
        ) {
            self.error = Some(e);
        }
    }
}
