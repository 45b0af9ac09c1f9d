//! Pseudo-periodicity certificates for rounded orbits of non-negative systems.
//!
//! An orbit is pseudo-periodic with start `N`, period `T` and growth
//! `α_1 … α_d` when `x⁽ᵗ⁺ᵀ⁾_j = b^{α_j}·x⁽ᵗ⁾_j` for all `t ≥ N`. Components
//! of the (phased) matrix graph are certified one at a time in topological
//! order. For a component `S` we hash a normalized signature of `x⁽ᵗ⁾_S`
//! (mantissas plus exponent offsets) and look for two times `t₁ < t₂` with
//! `x⁽ᵗ²⁾_S = b^γ·x⁽ᵗ¹⁾_S`. Feeders that grow at rate `γ` over `t₂ − t₁` scale
//! along with `S`, so the relation propagates by the mantissa-based rounding.
//! Feeders that grow strictly slower are checked to be invisible after
//! rounding over one whole window `[t₁, t₂)`; since rounding is monotone on
//! non-negative sums and their share only shrinks, they stay invisible.

use std::collections::HashMap;
use std::fmt;

use num_integer::Integer;
use num_rational::BigRational;
use thiserror::Error;

use crate::fpnum::{FpFormat, FpNumber};
use crate::lds::{content_lines, Lds, OrbitCache};
use crate::structure::{self, PeriodMode, PhasedLds, SccDecomposition};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PeriodicityError {
    #[error("the system has negative entries; pseudo-periodicity is undecidable in that regime")]
    NegativeEntries,
    #[error("component S{component} was not certified within {cap} steps")]
    CapExhausted { component: usize, cap: u64 },
    #[error("component S{0} has feeders")]
    NotTopComponent(usize),
    #[error("no certificate given for feeder component S{0}")]
    MissingFeeder(usize),
    #[error("x{coordinate} grows at different rates in different phases")]
    PhaseGrowthMismatch { coordinate: usize },
    #[error("certificate failed verification")]
    VerificationFailed,
    #[error("step {t} precedes the feeder stabilization index {start}")]
    TooEarly { t: u64, start: u64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

type Result<T> = std::result::Result<T, PeriodicityError>;

/// Per-period exponent growth of a coordinate; `NegInf` marks coordinates
/// that are zero from the start index on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Growth {
    NegInf,
    Finite(i64),
}

impl Growth {
    pub fn finite(self) -> Option<i64> {
        match self {
            Growth::NegInf => None,
            Growth::Finite(g) => Some(g),
        }
    }

    /// The growth over `factor` consecutive periods.
    pub fn times(self, factor: u64) -> Growth {
        match self {
            Growth::NegInf => Growth::NegInf,
            Growth::Finite(g) => Growth::Finite(g * factor as i64),
        }
    }
}

impl fmt::Display for Growth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Growth::NegInf => f.write_str("-inf"),
            Growth::Finite(g) => write!(f, "{g}"),
        }
    }
}

/// `(N, T, α)` together with `x⁽ᴺ⁾ … x⁽ᴺ⁺ᵀ⁻¹⁾`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoPeriodCertificate {
    pub start: u64,
    pub period: u64,
    pub growth: Vec<Growth>,
    pub snapshot: Vec<Vec<FpNumber>>,
}

impl PseudoPeriodCertificate {
    pub fn dim(&self) -> usize {
        self.growth.len()
    }

    /// `x⁽ᵗ⁾` for `t ≥ N`, read off the snapshot.
    pub fn value_at(&self, t: u64) -> Option<Vec<FpNumber>> {
        if t < self.start {
            return None;
        }
        let k = (t - self.start) / self.period;
        let r = (t - self.start) % self.period;
        let snap = &self.snapshot[r as usize];
        Some(
            snap.iter()
                .zip(&self.growth)
                .map(|(x, g)| match g {
                    Growth::Finite(a) => x.scale_pow(a * k as i64),
                    Growth::NegInf => x.clone(),
                })
                .collect(),
        )
    }

    /// One-line summary `N=.. T=.. alpha_1=.. …`.
    pub fn summary(&self) -> String {
        let mut out = format!("N={} T={}", self.start, self.period);
        for (j, g) in self.growth.iter().enumerate() {
            out.push_str(&format!(" alpha_{}={}", j + 1, g));
        }
        out
    }

    /// Parses the text produced by `Display`; snapshot values are read in `fmt`.
    pub fn parse(text: &str, fmt: &FpFormat) -> Result<Self> {
        let err = |line: usize, message: String| PeriodicityError::Parse { line, message };
        let mut lines = content_lines(text);
        let (hl, header) = lines.next().ok_or_else(|| err(1, "missing `cert` header".into()))?;
        let mut words = header.split_whitespace();
        if words.next() != Some("cert") {
            return Err(err(hl, "header must start with `cert`".into()));
        }
        let (mut start, mut period) = (None, None);
        for w in words {
            match w.split_once('=') {
                Some(("N", v)) => start = v.parse::<u64>().ok(),
                Some(("T", v)) => period = v.parse::<u64>().ok(),
                _ => return Err(err(hl, format!("unexpected `{w}`"))),
            }
        }
        let start = start.ok_or_else(|| err(hl, "bad or missing N=".into()))?;
        let period = period
            .filter(|&p| p > 0)
            .ok_or_else(|| err(hl, "bad or missing T=".into()))?;
        let mut growth = Vec::new();
        let mut snapshot = Vec::new();
        for (ln, line) in lines {
            if let Some(rest) = line.strip_prefix("alpha_") {
                let (idx, value) = rest
                    .split_once('=')
                    .ok_or_else(|| err(ln, "expected alpha_<j>=<value>".into()))?;
                if idx.parse::<usize>().ok() != Some(growth.len() + 1) {
                    return Err(err(ln, format!("expected alpha_{}", growth.len() + 1)));
                }
                growth.push(match value.trim() {
                    "-inf" => Growth::NegInf,
                    v => Growth::Finite(v.parse().map_err(|_| err(ln, format!("bad growth `{v}`")))?),
                });
            } else {
                let row = line
                    .split_whitespace()
                    .map(|s| FpNumber::parse(s, fmt, true))
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| err(ln, e.to_string()))?;
                if row.len() != growth.len() {
                    return Err(err(ln, format!("snapshot row needs {} values", growth.len())));
                }
                snapshot.push(row);
            }
        }
        if snapshot.len() as u64 != period {
            return Err(err(hl, format!("expected {period} snapshot rows")));
        }
        Ok(PseudoPeriodCertificate {
            start,
            period,
            growth,
            snapshot,
        })
    }
}

impl fmt::Display for PseudoPeriodCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cert N={} T={}", self.start, self.period)?;
        for (j, g) in self.growth.iter().enumerate() {
            writeln!(f, "alpha_{}={}", j + 1, g)?;
        }
        for row in &self.snapshot {
            let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

/// Certificate of one component: the relation holds on its vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentCertificate {
    pub component: usize,
    pub start: u64,
    pub period: u64,
    pub growth: Growth,
}

/// Closeness radii observed on a certified component. `beta` bounds the
/// exponent spread among its nonzero same-step coordinates, `eta` the gap
/// between its largest coordinate and its largest feeder coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClosenessBound {
    pub beta: u64,
    pub eta: u64,
    pub stabilization: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectOptions {
    /// Steps searched per component before giving up.
    pub cap: u64,
    pub period_mode: PeriodMode,
    /// Periods checked by the final verification (at least 2 are used).
    pub verify_periods: u64,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions {
            cap: 100_000,
            period_mode: PeriodMode::Gcd,
            verify_periods: 3,
        }
    }
}

type Signature = Vec<Option<(u64, i64)>>;

/// Mantissas and exponent offsets of `comp`, relative to the first nonzero
/// coordinate, plus that coordinate's exponent.
fn signature(v: &[FpNumber], comp: &[usize]) -> (Signature, Option<i64>) {
    let reference = comp.iter().find_map(|&q| v[q].exponent().finite());
    let sig = comp
        .iter()
        .map(|&q| {
            v[q].exponent()
                .finite()
                .map(|e| (v[q].digits(), e - reference.unwrap_or(0)))
        })
        .collect();
    (sig, reference)
}

fn scaled_on(earlier: &[FpNumber], later: &[FpNumber], comp: &[usize], g: i64) -> bool {
    comp.iter().all(|&q| later[q] == earlier[q].scale_pow(g))
}

fn zero_on(v: &[FpNumber], comp: &[usize]) -> bool {
    comp.iter().all(|&q| v[q].is_zero())
}

/// Stateful certification of the components of one non-negative system,
/// sharing a single cached orbit.
pub struct Detector<'a> {
    lds: &'a Lds,
    dec: SccDecomposition,
    cache: OrbitCache<'a>,
    opts: DetectOptions,
    min_start: u64,
    certs: Vec<Option<ComponentCertificate>>,
}

struct Feeder {
    vertices: Vec<usize>,
    cert: ComponentCertificate,
}

impl<'a> Detector<'a> {
    pub fn new(lds: &'a Lds, opts: DetectOptions) -> Result<Self> {
        if !lds.is_non_negative() {
            return Err(PeriodicityError::NegativeEntries);
        }
        let dec = structure::scc_decompose(lds);
        let n = dec.len();
        Ok(Detector {
            lds,
            dec,
            cache: OrbitCache::new(lds),
            opts,
            min_start: 0,
            certs: vec![None; n],
        })
    }

    pub fn decomposition(&self) -> &SccDecomposition {
        &self.dec
    }

    /// No certificate will start before `t`.
    pub fn set_min_start(&mut self, t: u64) {
        self.min_start = t;
    }

    /// Supplies the certificate of an already certified component.
    pub fn set_certificate(&mut self, cert: ComponentCertificate) {
        let c = cert.component;
        self.certs[c] = Some(cert);
    }

    pub fn certificate(&self, c: usize) -> Option<&ComponentCertificate> {
        self.certs[c].as_ref()
    }

    pub fn certify_all(&mut self) -> Result<Vec<ComponentCertificate>> {
        for c in 0..self.dec.len() {
            if self.certs[c].is_none() {
                let cert = self.certify_component(c)?;
                self.certs[c] = Some(cert);
            }
        }
        Ok(self.certs.iter().flatten().cloned().collect())
    }

    fn feeders(&self, c: usize) -> Result<Vec<Feeder>> {
        self.dec
            .feeders(c)
            .iter()
            .map(|&f| {
                let cert = self.certs[f].clone().ok_or(PeriodicityError::MissingFeeder(f))?;
                Ok(Feeder {
                    vertices: self.dec.component(f).to_vec(),
                    cert,
                })
            })
            .collect()
    }

    /// Certifies component `c`; all of its feeders must be certified.
    pub fn certify_component(&mut self, c: usize) -> Result<ComponentCertificate> {
        let comp = self.dec.component(c).to_vec();
        let feeders = self.feeders(c)?;
        let feed_period = feeders.iter().fold(1u64, |a, f| a.lcm(&f.cert.period));
        let start = feeders
            .iter()
            .map(|f| f.cert.start)
            .max()
            .unwrap_or(0)
            .max(self.min_start);
        let all_dead = feeders.iter().all(|f| f.cert.growth == Growth::NegInf);

        let mut seen: HashMap<(u64, Signature), (u64, Option<i64>)> = HashMap::new();
        for t in start..=start.saturating_add(self.opts.cap) {
            self.cache.ensure(t);
            let (sig, reference) = signature(self.cache.cached(t), &comp);
            if reference.is_none() && all_dead {
                // nothing enters S any more and S itself is zero
                let mut s = t;
                while s > 0 && zero_on(self.cache.cached(s - 1), &comp) {
                    s -= 1;
                }
                return Ok(ComponentCertificate {
                    component: c,
                    start: s,
                    period: 1,
                    growth: Growth::NegInf,
                });
            }
            let key = (t % feed_period, sig);
            if let Some(&(t1, ref1)) = seen.get(&key) {
                let delta = t - t1;
                let gamma = match (ref1, reference) {
                    (Some(a), Some(b)) => b - a,
                    _ => feeders
                        .iter()
                        .filter_map(|f| f.cert.growth.finite().map(|g| g * (delta / f.cert.period) as i64))
                        .max()
                        .expect("a live feeder exists"),
                };
                if self.relation_holds(&comp, &feeders, t1, t, gamma) {
                    let (s, period, g) = self.minimize(&comp, t1, delta, gamma);
                    return Ok(ComponentCertificate {
                        component: c,
                        start: s,
                        period,
                        growth: Growth::Finite(g),
                    });
                }
            }
            seen.insert(key, (t, reference));
        }
        Err(PeriodicityError::CapExhausted {
            component: c,
            cap: self.opts.cap,
        })
    }

    /// Given `x⁽ᵗ²⁾_S = b^γ·x⁽ᵗ¹⁾_S`, decides whether the relation with
    /// period `t₂ − t₁` holds for every later step.
    fn relation_holds(&self, comp: &[usize], feeders: &[Feeder], t1: u64, t2: u64, gamma: i64) -> bool {
        let delta = t2 - t1;
        let mut minor = vec![false; self.lds.dim()];
        let mut any_minor = false;
        for f in feeders {
            let slower = match f.cert.growth {
                Growth::NegInf => true,
                Growth::Finite(g) => {
                    let over = g * (delta / f.cert.period) as i64;
                    if over > gamma {
                        return false;
                    }
                    over < gamma
                }
            };
            if slower {
                any_minor = true;
                for &v in &f.vertices {
                    minor[v] = true;
                }
            }
        }
        if !any_minor {
            return true;
        }
        (t1..t2).all(|t| {
            let now = self.cache.cached(t);
            let next = self.cache.cached(t + 1);
            comp.iter()
                .all(|&q| self.lds.round_row(q, now, |j| !minor[j]) == next[q])
        })
    }

    /// Shortest period dividing `delta` and earliest start for a relation
    /// known to hold from `s` with period `delta` and growth `gamma`.
    fn minimize(&mut self, comp: &[usize], s: u64, delta: u64, gamma: i64) -> (u64, u64, i64) {
        self.cache.ensure(s + 2 * delta);
        let mut best = (delta, gamma);
        for d in 1..delta {
            if !delta.is_multiple_of(d) || (gamma as i128 * d as i128) % delta as i128 != 0 {
                continue;
            }
            let g = (gamma as i128 * d as i128 / delta as i128) as i64;
            let holds = (s..s + delta).all(|t| scaled_on(self.cache.cached(t), self.cache.cached(t + d), comp, g));
            if holds {
                best = (d, g);
                break;
            }
        }
        let (d, g) = best;
        let mut s = s;
        while s > 0 && scaled_on(self.cache.cached(s - 1), self.cache.cached(s - 1 + d), comp, g) {
            s -= 1;
        }
        (s, d, g)
    }

    /// Combines all component certificates into one for the whole system.
    pub fn global_certificate(&mut self) -> Option<PseudoPeriodCertificate> {
        let certs: Vec<&ComponentCertificate> = self.certs.iter().map(|c| c.as_ref()).collect::<Option<_>>()?;
        let start = certs.iter().map(|c| c.start).max().unwrap_or(0);
        let period = certs.iter().fold(1u64, |a, c| a.lcm(&c.period));
        let mut growth = vec![Growth::NegInf; self.lds.dim()];
        for c in &certs {
            for &v in self.dec.component(c.component) {
                growth[v] = c.growth.times(period / c.period);
            }
        }
        self.cache.ensure(start + period);
        let snapshot = (start..start + period).map(|t| self.cache.cached(t).to_vec()).collect();
        Some(PseudoPeriodCertificate {
            start,
            period,
            growth,
            snapshot,
        })
    }

    pub(crate) fn orbit(&mut self, t: u64) -> &[FpNumber] {
        self.cache.get(t)
    }
}

/// Certifies a component without feeders of the phased system.
pub fn detect_top_scc(phased: &PhasedLds, component: usize, opts: DetectOptions) -> Result<ComponentCertificate> {
    let mut det = Detector::new(phased.lds(), opts)?;
    if !det.decomposition().feeders(component).is_empty() {
        return Err(PeriodicityError::NotTopComponent(component));
    }
    det.certify_component(component)
}

/// Certifies a component of the phased system given its feeders' certificates.
pub fn detect_lower_scc(
    phased: &PhasedLds,
    component: usize,
    feeder_certs: &[ComponentCertificate],
    opts: DetectOptions,
) -> Result<ComponentCertificate> {
    let mut det = Detector::new(phased.lds(), opts)?;
    for cert in feeder_certs {
        det.set_certificate(cert.clone());
    }
    det.certify_component(component)
}

/// Whether the feeders of a component still change its rounded values after
/// step `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Influence {
    /// The component first deviates from its feeder-free evolution at step `at`.
    Yes {
        at: u64,
    },
    No,
}

/// Runs the component from `x⁽ᵗ⁾` with its feeders removed next to the true
/// orbit. If the feeders grow faster than the isolated component they must
/// show up eventually and the first deviation is returned; otherwise one
/// deviation-free window after both sides stabilize proves there is none.
pub fn will_influence_again(
    phased: &PhasedLds,
    component: usize,
    feeder_certs: &[ComponentCertificate],
    t: u64,
    opts: DetectOptions,
) -> Result<Influence> {
    let lds = phased.lds();
    let mut det = Detector::new(lds, opts)?;
    let comp = det.decomposition().component(component).to_vec();
    let feeder_ids = det.decomposition().feeders(component).to_vec();
    let mut feeders = Vec::new();
    for f in feeder_ids {
        let cert = feeder_certs
            .iter()
            .find(|c| c.component == f)
            .ok_or(PeriodicityError::MissingFeeder(f))?;
        feeders.push(cert.clone());
    }
    let start = feeders.iter().map(|f| f.start).max().unwrap_or(0);
    if t < start {
        return Err(PeriodicityError::TooEarly { t, start });
    }

    // the isolated component as a system of its own, started from x⁽ᵗ⁾
    let now = det.orbit(t).to_vec();
    let sub_matrix = comp
        .iter()
        .map(|&q| comp.iter().map(|&j| lds.entry(q, j).clone()).collect())
        .collect();
    let sub_init: Vec<BigRational> = comp.iter().map(|&q| now[q].to_rational()).collect();
    let sub = Lds::new(sub_matrix, sub_init, *lds.format()).expect("square submatrix");
    let mut sub_det = Detector::new(&sub, opts)?;
    let sub_certs = sub_det.certify_all()?;
    let sub_cert = sub_det.global_certificate().expect("all certified");
    let iso_period = sub_cert.period;
    let iso_growth = sub_certs
        .iter()
        .map(|c| c.growth.times(iso_period / c.period))
        .max()
        .unwrap_or(Growth::NegInf);

    let common = feeders.iter().fold(iso_period, |a, f| a.lcm(&f.period));
    let iso_rate = iso_growth.times(common / iso_period);
    let faster = feeders.iter().any(|f| f.growth.times(common / f.period) > iso_rate);

    let horizon = if faster {
        t.saturating_add(opts.cap)
    } else {
        t + sub_cert.start + common
    };
    let mut sub_cache = OrbitCache::new(&sub);
    for s in t + 1..=horizon {
        let actual = det.orbit(s);
        let iso = sub_cache.get(s - t);
        if comp.iter().zip(iso).any(|(&q, x)| actual[q] != *x) {
            return Ok(Influence::Yes { at: s });
        }
    }
    if faster {
        Err(PeriodicityError::CapExhausted {
            component,
            cap: opts.cap,
        })
    } else {
        Ok(Influence::No)
    }
}

/// Certification of the phased system, component by component.
#[derive(Debug, Clone)]
pub struct PhasedCertification {
    pub phased: PhasedLds,
    pub decomposition: SccDecomposition,
    pub components: Vec<ComponentCertificate>,
    /// Certificate in blown-up coordinates.
    pub certificate: PseudoPeriodCertificate,
}

/// Blows the system up and certifies every component, verifying the result.
pub fn certify_phased(lds: &Lds, opts: DetectOptions) -> Result<PhasedCertification> {
    if !lds.is_non_negative() {
        return Err(PeriodicityError::NegativeEntries);
    }
    let phased = structure::blowup_with(lds, opts.period_mode);
    let periods = opts.verify_periods.max(2);
    let mut min_start = 0;
    for _ in 0..3 {
        let mut det = Detector::new(phased.lds(), opts)?;
        det.set_min_start(min_start);
        let components = det.certify_all()?;
        let certificate = det.global_certificate().expect("all certified");
        if verify_certificate(phased.lds(), &certificate, periods) {
            let decomposition = det.decomposition().clone();
            return Ok(PhasedCertification {
                phased,
                decomposition,
                components,
                certificate,
            });
        }
        min_start = 2 * (certificate.start + certificate.period);
    }
    Err(PeriodicityError::VerificationFailed)
}

/// Moves a blown-up certificate back to original coordinates. Fails when a
/// coordinate grows at different rates in different phases, in which case
/// the original orbit is not pseudo-periodic in the per-coordinate sense.
pub fn project_certificate(phased: &PhasedLds, cert: &PseudoPeriodCertificate) -> Result<PseudoPeriodCertificate> {
    let p = phased.factor();
    let period = cert.period.lcm(&p);
    let scale = period / cert.period;
    let d = phased.original().dim();
    let mut growth = Vec::with_capacity(d);
    for q in 0..d {
        let mut alpha = None;
        for i in 0..p {
            let v = phased.index(q, i);
            let live = cert.snapshot.iter().any(|row| !row[v].is_zero());
            if !live {
                continue;
            }
            let g = cert.growth[v].times(scale);
            match alpha {
                None => alpha = Some(g),
                Some(a) if a != g => return Err(PeriodicityError::PhaseGrowthMismatch { coordinate: q + 1 }),
                Some(_) => {}
            }
        }
        growth.push(alpha.unwrap_or(Growth::NegInf));
    }
    let snapshot = phased
        .original()
        .orbit()
        .skip(cert.start as usize)
        .take(period as usize)
        .map(|pt| pt.v)
        .collect();
    Ok(PseudoPeriodCertificate {
        start: cert.start,
        period,
        growth,
        snapshot,
    })
}

/// Certificate of a non-negative system in its own coordinates, verified
/// before it is returned.
pub fn assemble_certificate(lds: &Lds, opts: DetectOptions) -> Result<PseudoPeriodCertificate> {
    let pc = certify_phased(lds, opts)?;
    let cert = project_certificate(&pc.phased, &pc.certificate)?;
    if !verify_certificate(lds, &cert, opts.verify_periods.max(2)) {
        return Err(PeriodicityError::VerificationFailed);
    }
    Ok(cert)
}

/// Simulates to `N + (k+1)·T` and checks the snapshot and
/// `x⁽ᵗ⁺ᵀ⁾_j = b^{α_j}·x⁽ᵗ⁾_j` for `N ≤ t ≤ N + k·T` exactly.
pub fn verify_certificate(lds: &Lds, cert: &PseudoPeriodCertificate, k: u64) -> bool {
    if cert.period == 0 || cert.growth.len() != lds.dim() || cert.snapshot.len() as u64 != cert.period {
        return false;
    }
    let horizon = cert.start + (k + 1) * cert.period;
    let orbit: Vec<Vec<FpNumber>> = lds.orbit().take(horizon as usize + 1).map(|pt| pt.v).collect();
    let n = cert.start as usize;
    let t_len = cert.period as usize;
    if cert.snapshot.iter().enumerate().any(|(r, row)| *row != orbit[n + r]) {
        return false;
    }
    (n..=n + k as usize * t_len).all(|t| {
        cert.growth.iter().enumerate().all(|(j, g)| match g {
            Growth::NegInf => orbit[t][j].is_zero() && orbit[t + t_len][j].is_zero(),
            Growth::Finite(a) => orbit[t + t_len][j] == orbit[t][j].scale_pow(*a),
        })
    })
}

/// Measures closeness radii of `component` (vertex list) against the vertices
/// in `feeders` over five certified periods.
pub fn closeness_bound(
    lds: &Lds,
    cert: &PseudoPeriodCertificate,
    component: &[usize],
    feeders: &[usize],
) -> ClosenessBound {
    let (mut beta, mut eta) = (0i64, 0i64);
    let end = cert.start + 5 * cert.period;
    for pt in lds.orbit().take(end as usize).skip(cert.start as usize) {
        let exps: Vec<i64> = component.iter().filter_map(|&q| pt.v[q].exponent().finite()).collect();
        if let (Some(lo), Some(hi)) = (exps.iter().min(), exps.iter().max()) {
            beta = beta.max(hi - lo + 1);
            if let Some(fmax) = feeders.iter().filter_map(|&q| pt.v[q].exponent().finite()).max() {
                eta = eta.max((hi - fmax).abs() + 1);
            }
        }
    }
    ClosenessBound {
        beta: beta as u64,
        eta: eta as u64,
        stabilization: cert.start,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::blowup;

    fn sys(m: &[Vec<i64>], x: &[i64]) -> Lds {
        Lds::from_integers(m, x, FpFormat::decimal(1).unwrap()).unwrap()
    }

    fn check(lds: &Lds) -> PseudoPeriodCertificate {
        let cert = assemble_certificate(lds, DetectOptions::default()).unwrap();
        assert!(verify_certificate(lds, &cert, 5));
        cert
    }

    #[test]
    fn times_three() {
        let cert = check(&sys(&[vec![3]], &[1]));
        assert_eq!(
            (cert.start, cert.period, cert.growth.clone()),
            (1, 2, vec![Growth::Finite(1)])
        );
    }

    #[test]
    fn times_ten_and_identity() {
        let cert = check(&sys(&[vec![10]], &[1]));
        assert_eq!((cert.start, cert.period), (0, 1));
        assert_eq!(cert.growth, vec![Growth::Finite(1)]);
        let cert = check(&sys(&[vec![1]], &[1]));
        assert_eq!((cert.start, cert.period), (0, 1));
        assert_eq!(cert.growth, vec![Growth::Finite(0)]);
    }

    #[test]
    fn diag_ten_three() {
        let cert = check(&sys(&[vec![10, 0], vec![0, 3]], &[1, 1]));
        assert_eq!(cert.period, 2);
        assert_eq!(cert.growth, vec![Growth::Finite(2), Growth::Finite(1)]);
    }

    #[test]
    fn weighted_two_cycle() {
        let lds = sys(&[vec![0, 1], vec![10, 0]], &[1, 0]);
        let cert = check(&lds);
        assert_eq!(cert.period, 2);
        assert_eq!(cert.growth, vec![Growth::Finite(1), Growth::Finite(1)]);
        let pc = certify_phased(&lds, DetectOptions::default()).unwrap();
        assert_eq!(pc.phased.factor(), 2);
        for (v, g) in pc.certificate.growth.iter().enumerate() {
            let live = pc.certificate.snapshot.iter().any(|r| !r[v].is_zero());
            if live {
                assert_eq!(g.times(2 / pc.certificate.period), Growth::Finite(1));
            }
        }
    }

    #[test]
    fn lower_component_follows_dominant_feeder() {
        let cert = check(&sys(&[vec![10, 0], vec![1, 10]], &[1, 0]));
        assert_eq!(cert.growth[0].times(1), cert.growth[1]);
        let cert = check(&sys(&[vec![10, 0], vec![1, 1]], &[1, 1]));
        assert_eq!(cert.growth[1], cert.growth[0]);
        assert!(cert.growth[0] > Growth::Finite(0));
    }

    #[test]
    fn zero_system_gets_neg_inf() {
        let cert = check(&sys(&[vec![0, 0], vec![0, 0]], &[3, 4]));
        assert_eq!(cert.start, 1);
        assert_eq!(cert.growth, vec![Growth::NegInf; 2]);
        let zero = PseudoPeriodCertificate {
            start: 0,
            period: 1,
            growth: vec![Growth::NegInf],
            snapshot: vec![vec![FpFormat::decimal(1).unwrap().zero()]],
        };
        assert!(verify_certificate(&sys(&[vec![0]], &[0]), &zero, 3));
    }

    #[test]
    fn nilpotent_feeder_leaves_lower_component_alone() {
        // x1 dies after one step, x2 keeps a self-loop of 3
        let cert = check(&sys(&[vec![0, 0], vec![5, 3]], &[1, 1]));
        assert_eq!(cert.growth[0], Growth::NegInf);
        assert_eq!(cert.growth[1].times(2 / cert.period), Growth::Finite(1));
    }

    #[test]
    fn wrong_period_fails_verification() {
        let lds = sys(&[vec![3]], &[1]);
        let mut cert = check(&lds);
        let extra = cert.snapshot[0].clone();
        cert.period = 3;
        cert.snapshot.push(extra);
        assert!(!verify_certificate(&lds, &cert, 3));
    }

    #[test]
    fn negative_entries_refused() {
        let lds = sys(&[vec![-1]], &[1]);
        assert_eq!(
            assemble_certificate(&lds, DetectOptions::default()),
            Err(PeriodicityError::NegativeEntries)
        );
    }

    #[test]
    fn top_detection_requires_no_feeders() {
        let lds = sys(&[vec![10, 0], vec![1, 10]], &[1, 0]);
        let phased = blowup(&lds);
        let opts = DetectOptions::default();
        let top = detect_top_scc(&phased, 0, opts).unwrap();
        assert_eq!(top.growth, Growth::Finite(1));
        assert_eq!(
            detect_top_scc(&phased, 1, opts),
            Err(PeriodicityError::NotTopComponent(1))
        );
        let lower = detect_lower_scc(&phased, 1, std::slice::from_ref(&top), opts).unwrap();
        assert_eq!(lower.growth.times(top.period), top.growth.times(lower.period));
    }

    #[test]
    fn influence_cases() {
        let opts = DetectOptions::default();
        // feeder ×10 overtakes a constant component
        let lds = sys(&[vec![10, 0], vec![1, 1]], &[1, 1000]);
        let phased = blowup(&lds);
        let top = detect_top_scc(&phased, 0, opts).unwrap();
        assert!(matches!(
            will_influence_again(&phased, 1, std::slice::from_ref(&top), 0, opts).unwrap(),
            Influence::Yes { .. }
        ));
        // constant feeder under a ×10 component
        let lds = sys(&[vec![1, 0], vec![1, 10]], &[1, 100]);
        let phased = blowup(&lds);
        let top = detect_top_scc(&phased, 0, opts).unwrap();
        assert_eq!(
            will_influence_again(&phased, 1, &[top], 0, opts).unwrap(),
            Influence::No
        );
        // equal growth, visible right away: 10 + 5 rounds to 20
        let lds = sys(&[vec![10, 0], vec![1, 10]], &[5, 1]);
        let phased = blowup(&lds);
        let top = detect_top_scc(&phased, 0, opts).unwrap();
        assert_eq!(
            will_influence_again(&phased, 1, &[top], 0, opts).unwrap(),
            Influence::Yes { at: 1 }
        );
    }

    #[test]
    fn certificate_text_round_trips() {
        let lds = sys(&[vec![10, 0], vec![0, 3]], &[1, 1]);
        let cert = check(&lds);
        let parsed = PseudoPeriodCertificate::parse(&cert.to_string(), lds.format()).unwrap();
        assert_eq!(parsed, cert);
        assert_eq!(cert.summary(), "N=1 T=2 alpha_1=2 alpha_2=1");
    }

    #[test]
    fn value_at_matches_orbit() {
        let lds = sys(&[vec![3, 1], vec![0, 2]], &[1, 1]);
        let cert = check(&lds);
        for pt in lds.orbit().take(40).skip(cert.start as usize) {
            assert_eq!(cert.value_at(pt.t).unwrap(), pt.v);
        }
    }
}
