use std::collections::HashMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    TransferIn,
    TransferOut,
    Kernel,
    Accumulate,
    Pin,
    Unpin,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::TransferIn => "TransferIn",
            EventKind::TransferOut => "TransferOut",
            EventKind::Kernel => "Kernel",
            EventKind::Accumulate => "Accumulate",
            EventKind::Pin => "Pin",
            EventKind::Unpin => "Unpin",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceEvent {
    pub device: usize,
    pub kind: EventKind,
    pub payload: String,
    pub start: f64,
    pub end: f64,
    pub bytes: u64,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "device={} kind={} payload={} start={:.9} end={:.9} bytes={}",
            self.device,
            self.kind.as_str(),
            self.payload,
            self.start,
            self.end,
            self.bytes
        )
    }
}

/// Timestamped events of one operator pass, simulated or real.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExecutionTrace {
    pub events: Vec<TraceEvent>,
    /// Peak allocated bytes per device.
    pub high_water: Vec<u64>,
    /// Memory budget per device.
    pub budgets: Vec<u64>,
    pub makespan: f64,
}

impl ExecutionTrace {
    /// One record per line, in event order.
    pub fn to_records(&self) -> String {
        let mut s = String::new();
        for e in &self.events {
            s.push_str(&e.to_string());
            s.push('\n');
        }
        s
    }

    pub fn check_budgets(&self) -> Result<(), String> {
        for (d, (&hw, &b)) in self.high_water.iter().zip(&self.budgets).enumerate() {
            if hw > b {
                return Err(format!("device {d} peaked at {hw} bytes over a budget of {b}"));
            }
        }
        Ok(())
    }

    /// Kernels on a device never overlap, and every accumulation starts after
    /// the kernel and the partial transfer carrying its payload have ended.
    pub fn check_ordering(&self) -> Result<(), String> {
        let mut kernels: HashMap<usize, Vec<(f64, f64)>> = HashMap::new();
        let mut ends: HashMap<(usize, EventKind, &str), f64> = HashMap::new();
        for e in &self.events {
            if e.end < e.start {
                return Err(format!("event ends before it starts: {e}"));
            }
            if e.kind == EventKind::Kernel {
                kernels.entry(e.device).or_default().push((e.start, e.end));
            }
            let slot = ends.entry((e.device, e.kind, e.payload.as_str())).or_insert(f64::NEG_INFINITY);
            *slot = slot.max(e.end);
        }
        for (d, mut ks) in kernels {
            ks.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in ks.windows(2) {
                if w[1].0 < w[0].1 {
                    return Err(format!("device {d}: kernels overlap at {:.9}", w[1].0));
                }
            }
        }
        for e in self.events.iter().filter(|e| e.kind == EventKind::Accumulate) {
            for need in [EventKind::Kernel, EventKind::TransferIn] {
                match ends.get(&(e.device, need, e.payload.as_str())) {
                    Some(&end) if end <= e.start => {}
                    Some(_) => return Err(format!("accumulate starts before its {need:?}: {e}")),
                    None => return Err(format!("accumulate without a {need:?}: {e}")),
                }
            }
        }
        Ok(())
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        self.check_budgets()?;
        self.check_ordering()
    }

    pub fn busy_time(&self, device: usize, kind: EventKind) -> f64 {
        self.events
            .iter()
            .filter(|e| e.device == device && e.kind == kind)
            .map(|e| e.end - e.start)
            .sum()
    }
}
