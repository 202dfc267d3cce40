//! Run artifacts: binary models and controllers, CSV trajectories, JSON summaries.
//!
//! Binary layouts are little-endian. A lattice is written as `u32 dim`,
//! `f64 eta`, then `dim` lower and `dim` upper bounds.
//!
//! ```text
//! model.bin       "SLMD" u32 version | state lattice | input lattice | f64 eps
//!                 i64 initial (−1 = none) | u64 states | u64 inputs
//!                 per state: u8 safe, then per input: u8 enabled [, i64 lo×n, i64 hi×n]
//! controller.bin  "SLCT" u32 version | state lattice | input lattice | f64 eps
//!                 u64 states | per state: u8 winning, u32 k, u32 input×k
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{SymbolicModel, TransitionTable};
use crate::explore::{BatchRecord, ExplorationRun, TrajRow};
use crate::synthesis::SafetyController;
use crate::tsys::{IndexBox, Lattice, StateSet};

pub const MODEL_MAGIC: &[u8; 4] = b"SLMD";
pub const CONTROLLER_MAGIC: &[u8; 4] = b"SLCT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad format: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn bad<T>(msg: impl Into<String>) -> Result<T, IoError> {
    Err(IoError::Format(msg.into()))
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn i64(&mut self, v: i64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn lattice(&mut self, l: &Lattice) {
        self.u32(l.dim() as u32);
        self.f64(l.eta());
        for &v in l.lower().iter().chain(l.upper()) {
            self.f64(v);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IoError> {
        if self.pos + n > self.buf.len() {
            return bad(format!("truncated at byte {} (need {n} more)", self.pos));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, IoError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, IoError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, IoError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn i64(&mut self) -> Result<i64, IoError> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, IoError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn lattice(&mut self) -> Result<Lattice, IoError> {
        let n = self.u32()? as usize;
        if n == 0 || n > 64 {
            return bad(format!("lattice dimension {n}"));
        }
        let eta = self.f64()?;
        let lo = (0..n).map(|_| self.f64()).collect::<Result<Vec<_>, _>>()?;
        let hi = (0..n).map(|_| self.f64()).collect::<Result<Vec<_>, _>>()?;
        Lattice::new(eta, &lo, &hi).map_err(|e| IoError::Format(e.to_string()))
    }
    fn header(&mut self, magic: &[u8; 4]) -> Result<(), IoError> {
        if self.take(4)? != magic {
            return bad(format!("expected magic {:?}", String::from_utf8_lossy(magic)));
        }
        let v = self.u32()?;
        if v != FORMAT_VERSION {
            return bad(format!("unsupported version {v}"));
        }
        Ok(())
    }
    fn finish(&self) -> Result<(), IoError> {
        if self.pos != self.buf.len() {
            return bad(format!("{} trailing bytes", self.buf.len() - self.pos));
        }
        Ok(())
    }
}

pub fn encode_model(m: &SymbolicModel) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MODEL_MAGIC);
    w.u32(FORMAT_VERSION);
    w.lattice(&m.state_lattice);
    w.lattice(&m.input_lattice);
    w.f64(m.eps);
    w.i64(m.initial.map_or(-1, |i| i as i64));
    w.u64(m.n_states() as u64);
    w.u64(m.n_inputs() as u64);
    for s in 0..m.n_states() {
        w.u8(m.safe_states.contains(s) as u8);
        for u in 0..m.n_inputs() {
            match m.get(s, u) {
                None => w.u8(0),
                Some(b) => {
                    w.u8(1);
                    b.lo.iter().chain(&b.hi).for_each(|&v| w.i64(v));
                }
            }
        }
    }
    w.0
}

pub fn decode_model(buf: &[u8]) -> Result<SymbolicModel, IoError> {
    let mut r = Reader { buf, pos: 0 };
    r.header(MODEL_MAGIC)?;
    let state_lattice = r.lattice()?;
    let input_lattice = r.lattice()?;
    let eps = r.f64()?;
    let initial = match r.i64()? {
        -1 => None,
        i if i >= 0 => Some(i as usize),
        i => return bad(format!("initial state {i}")),
    };
    let states = r.u64()? as usize;
    let inputs = r.u64()? as usize;
    if states != state_lattice.len() || inputs != input_lattice.len() {
        return bad("state or input count disagrees with the lattices");
    }
    let n = state_lattice.dim();
    let mut safe_states = StateSet::empty(states);
    let mut table = TransitionTable::disabled(states, inputs, n);
    for s in 0..states {
        match r.u8()? {
            0 => {}
            1 => safe_states.insert(s),
            f => return bad(format!("safe flag {f}")),
        }
        for u in 0..inputs {
            match r.u8()? {
                0 => {}
                1 => {
                    let v = (0..2 * n).map(|_| r.i64()).collect::<Result<Vec<_>, _>>()?;
                    table.set(s, u, Some(&IndexBox::new(&v[..n], &v[n..])));
                }
                f => return bad(format!("enabled flag {f}")),
            }
        }
    }
    r.finish()?;
    Ok(SymbolicModel { state_lattice, input_lattice, eps, safe_states, table, initial })
}

pub fn encode_controller(c: &SafetyController) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(CONTROLLER_MAGIC);
    w.u32(FORMAT_VERSION);
    w.lattice(&c.state_lattice);
    w.lattice(&c.input_lattice);
    w.f64(c.eps);
    w.u64(c.admissible.len() as u64);
    for (s, adm) in c.admissible.iter().enumerate() {
        w.u8(c.winning.contains(s) as u8);
        w.u32(adm.len() as u32);
        adm.iter().for_each(|&u| w.u32(u));
    }
    w.0
}

pub fn decode_controller(buf: &[u8]) -> Result<SafetyController, IoError> {
    let mut r = Reader { buf, pos: 0 };
    r.header(CONTROLLER_MAGIC)?;
    let state_lattice = r.lattice()?;
    let input_lattice = r.lattice()?;
    let eps = r.f64()?;
    let states = r.u64()? as usize;
    if states != state_lattice.len() {
        return bad("state count disagrees with the lattice");
    }
    let mut winning = StateSet::empty(states);
    let mut admissible = Vec::with_capacity(states);
    for s in 0..states {
        match r.u8()? {
            0 => {}
            1 => winning.insert(s),
            f => return bad(format!("winning flag {f}")),
        }
        let k = r.u32()? as usize;
        if k > input_lattice.len() {
            return bad(format!("state {s} lists {k} inputs"));
        }
        let adm = (0..k).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
        if adm.iter().any(|&u| u as usize >= input_lattice.len()) {
            return bad(format!("state {s} lists an input id out of range"));
        }
        admissible.push(adm);
    }
    r.finish()?;
    Ok(SafetyController { state_lattice, input_lattice, eps, winning, admissible })
}

pub fn write_trajectory<W: Write>(w: W, rows: &[TrajRow], n: usize, m: usize) -> Result<(), IoError> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=m).map(|i| format!("u{i}")));
    header.extend((1..=n).map(|i| format!("y{i}")));
    out.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.t.to_string()];
        rec.extend(r.x.iter().chain(&r.u).chain(&r.y).map(|v| v.to_string()));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trajectory<R: Read>(r: R) -> Result<(Vec<TrajRow>, usize, usize), IoError> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    let n = header.iter().filter(|h| h.starts_with('x')).count();
    let m = header.iter().filter(|h| h.starts_with('u')).count();
    if header.get(0) != Some("t") || header.len() != 1 + 2 * n + m {
        return bad("trajectory header must be t,x1..xn,u1..um,y1..yn");
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, IoError> {
            rec.get(i).unwrap_or("").parse::<f64>().map_err(|e| IoError::Format(format!("column {i}: {e}")))
        };
        let t = rec.get(0).unwrap_or("").parse::<usize>().map_err(|e| IoError::Format(e.to_string()))?;
        let x = (1..=n).map(num).collect::<Result<Vec<_>, _>>()?;
        let u = (n + 1..=n + m).map(num).collect::<Result<Vec<_>, _>>()?;
        let y = (n + m + 1..=2 * n + m).map(num).collect::<Result<Vec<_>, _>>()?;
        rows.push(TrajRow { t, x, u, y });
    }
    Ok((rows, n, m))
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub system: String,
    pub seed: u64,
    pub termination: String,
    pub batches: usize,
    pub states: usize,
    pub safe_states: usize,
    pub q0_states: usize,
    pub inputs: usize,
    pub enabled_pairs: usize,
    pub transitions: u64,
    pub winning: usize,
    pub winning_per_batch: Vec<usize>,
    pub trajectory_steps: usize,
    pub final_state: Vec<f64>,
}

pub fn summarize(run: &ExplorationRun, system: &str, seed: u64) -> Summary {
    Summary {
        system: system.to_string(),
        seed,
        termination: run.termination.as_str().to_string(),
        batches: run.batches.len(),
        states: run.model.n_states(),
        safe_states: run.safe_state_count,
        q0_states: run.q0_count,
        inputs: run.model.n_inputs(),
        enabled_pairs: run.model.enabled_count(),
        transitions: run.model.transition_count(),
        winning: run.controller.winning.count(),
        winning_per_batch: run.batches.iter().map(|b| b.winning).collect(),
        trajectory_steps: run.trajectory.len(),
        final_state: run.final_state.clone(),
    }
}

pub const ARTIFACTS: [&str; 5] = ["trajectory.csv", "batches.json", "model.bin", "controller.bin", "summary.json"];

/// Writes every artifact of `run` to `out`. Files go to a sibling temporary
/// directory first, which replaces `out` only once everything is written.
pub fn write_run(out: &Path, run: &ExplorationRun, config_toml: &str, system: &str, seed: u64) -> Result<(), IoError> {
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent)?;
    let tmp = tempfile::Builder::new().prefix(".symlearn-run-").tempdir_in(&parent)?;
    let dir = tmp.path();
    let n = run.model.state_lattice.dim();
    let m = run.model.input_lattice.dim();
    write_trajectory(fs::File::create(dir.join("trajectory.csv"))?, &run.trajectory, n, m)?;
    fs::write(dir.join("batches.json"), serde_json::to_string_pretty(&run.batches)? + "\n")?;
    fs::write(dir.join("model.bin"), encode_model(&run.model))?;
    fs::write(dir.join("controller.bin"), encode_controller(&run.controller))?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summarize(run, system, seed))? + "\n")?;
    fs::write(dir.join("config.toml"), config_toml)?;
    if !run.models.is_empty() {
        fs::create_dir(dir.join("models"))?;
        for (k, model) in run.models.iter().enumerate() {
            fs::write(dir.join("models").join(format!("model_{k:03}.bin")), encode_model(model))?;
        }
    }
    if out.exists() {
        fs::remove_dir_all(out)?;
    }
    let kept = tmp.keep();
    fs::rename(&kept, out).inspect_err(|_| {
        let _ = fs::remove_dir_all(&kept);
    })?;
    Ok(())
}

pub fn read_batches(path: &Path) -> Result<Vec<BatchRecord>, IoError> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

/// Per-batch model files of a run directory, in batch order.
pub fn batch_model_paths(run_dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    let dir = run_dir.join("models");
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut v: Vec<PathBuf> = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
    v.retain(|p| p.extension().is_some_and(|e| e == "bin"));
    v.sort();
    Ok(v)
}
