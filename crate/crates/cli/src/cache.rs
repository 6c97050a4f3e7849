//! On-disk matrix cache.
//!
//! Entries are `<key>.csv` files: one header line
//! `# meta-ot cache v1 kind=<kind> rows=<r> cols=<c>` followed by row-major
//! decimal rows. Unreadable or inconsistent entries are reported, dropped and
//! recomputed.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use meta_ot::MetaMeasure;
use ndarray::Array2;
use sha2::{Digest, Sha256};

const VERSION_TAG: &str = "meta-ot cache v1";

/// Incremental cache key over inputs and resolved config.
pub struct KeyBuilder(Sha256);

impl KeyBuilder {
    pub fn new(kind: &str) -> Self {
        let mut h = Sha256::new();
        h.update(VERSION_TAG.as_bytes());
        h.update([0]);
        h.update(kind.as_bytes());
        h.update([0]);
        Self(h)
    }

    pub fn text(mut self, s: &str) -> Self {
        self.0.update((s.len() as u64).to_le_bytes());
        self.0.update(s.as_bytes());
        self
    }

    pub fn meta(mut self, m: &MetaMeasure) -> Self {
        let h = &mut self.0;
        h.update((m.len() as u64).to_le_bytes());
        h.update((m.dim() as u64).to_le_bytes());
        for (inner, w) in m.inner().iter().zip(m.outer_weights()) {
            h.update(w.to_bits().to_le_bytes());
            h.update((inner.len() as u64).to_le_bytes());
            for v in inner.points().iter().chain(inner.weights()) {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        self
    }

    pub fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}

pub struct Cache {
    dir: Option<PathBuf>,
    verbose: bool,
}

impl Cache {
    pub fn new(dir: Option<PathBuf>, verbose: bool) -> Self {
        Self { dir, verbose }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.csv")))
    }

    /// Cached matrix for `key`, or `compute()` stored under it.
    pub fn get_or_compute(
        &self,
        kind: &str,
        key: &str,
        compute: impl FnOnce() -> Result<Array2<f64>>,
    ) -> Result<Array2<f64>> {
        let Some(path) = self.path(key) else {
            return compute();
        };
        if path.exists() {
            match fs::read_to_string(&path)
                .map_err(anyhow::Error::from)
                .and_then(|t| decode(&t, kind))
            {
                Ok(m) => {
                    if self.verbose {
                        eprintln!("cache hit: {kind} {key}");
                    }
                    return Ok(m);
                }
                Err(e) => eprintln!("warning: discarding corrupt cache entry {}: {e}", path.display()),
            }
        } else if self.verbose {
            eprintln!("cache miss: {kind} {key}");
        }
        let m = compute()?;
        let dir = path.parent().expect("cache file has a parent");
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, encode(&m, kind)).with_context(|| format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, &path).with_context(|| format!("writing {}", path.display()))?;
        Ok(m)
    }
}

fn encode(m: &Array2<f64>, kind: &str) -> String {
    let (r, c) = m.dim();
    let mut out = format!("# {VERSION_TAG} kind={kind} rows={r} cols={c}\n");
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn decode(text: &str, kind: &str) -> Result<Array2<f64>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let rest = header
        .strip_prefix(&format!("# {VERSION_TAG} kind={kind} "))
        .context("bad header")?;
    let mut dims = [0usize; 2];
    for (slot, (field, name)) in dims.iter_mut().zip(rest.split(' ').zip(["rows=", "cols="])) {
        *slot = field.strip_prefix(name).context("bad header")?.parse()?;
    }
    let [r, c] = dims;
    let mut flat = Vec::with_capacity(r * c);
    let mut nrows = 0;
    for line in lines {
        let row = line
            .split(',')
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if row.len() != c || row.iter().any(|v| !v.is_finite()) {
            bail!("malformed row {}", nrows + 1);
        }
        flat.extend(row);
        nrows += 1;
    }
    if nrows != r {
        bail!("expected {r} rows, found {nrows}");
    }
    Ok(Array2::from_shape_vec((r, c), flat)?)
}
