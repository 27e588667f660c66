//! Compressed sparse row storage with a pattern fixed before accumulation.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::mesh::LocalToGlobal;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix holding every `(ι(e,λ), ι(e,μ))` coupling.
    pub fn from_pattern(l2g: &LocalToGlobal) -> Self {
        let n = l2g.n_dofs;
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for cell in l2g.map.chunks(l2g.nbasis) {
            for &r in cell {
                rows[r].extend_from_slice(cell);
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            col_idx.extend(r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        Self { n_rows: n, n_cols: n, row_ptr, col_idx, values: vec![0.0; nnz] }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    fn slot(&self, r: usize, c: usize) -> Option<usize> {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[a..b].binary_search(&c).ok().map(|k| a + k)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.slot(r, c).map_or(0.0, |k| self.values[k])
    }

    /// Adds into an existing pattern slot.
    pub fn add(&mut self, r: usize, c: usize, v: f64) -> Result<()> {
        let k = self
            .slot(r, c)
            .ok_or_else(|| Error::Internal(format!("({r}, {c}) outside the preallocated pattern")))?;
        self.values[k] += v;
        Ok(())
    }

    /// `A[dofs[i], dofs[j]] += local[i·n + j]`.
    pub fn add_element(&mut self, dofs: &[usize], local: &[f64]) -> Result<()> {
        let n = dofs.len();
        for (i, &r) in dofs.iter().enumerate() {
            let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let cols = &self.col_idx[a..b];
            for (j, &c) in dofs.iter().enumerate() {
                let k = cols
                    .binary_search(&c)
                    .map_err(|_| Error::Internal(format!("({r}, {c}) outside the preallocated pattern")))?;
                self.values[a + k] += local[i * n + j];
            }
        }
        Ok(())
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.n_rows) {
            let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
            *yr = self.col_idx[a..b].iter().zip(&self.values[a..b]).map(|(&c, v)| v * x[c]).sum();
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.get(r, r)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|r| self.values[self.row_ptr[r]..self.row_ptr[r + 1]].iter().sum())
            .collect()
    }

    /// Order-independent digest of the stored values.
    pub fn checksum(&self) -> f64 {
        let mut s = 0.0;
        for r in 0..self.n_rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let w = 1.0 + ((r * 31 + self.col_idx[k] * 17) % 97) as f64 / 97.0;
                s += w * self.values[k];
            }
        }
        s
    }

    /// `max |A_ij - B_ij| / max |A|` over the union of both patterns.
    pub fn max_rel_diff(&self, other: &CsrMatrix) -> f64 {
        let scale = self.max_abs().max(other.max_abs()).max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for (m, o) in [(self, other), (other, self)] {
            for r in 0..m.n_rows {
                for k in m.row_ptr[r]..m.row_ptr[r + 1] {
                    worst = worst.max((m.values[k] - o.get(r, m.col_idx[k])).abs());
                }
            }
        }
        worst / scale
    }

    /// MatrixMarket coordinate format, 1-based, general real.
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for r in 0..self.n_rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                writeln!(w, "{} {} {:.17e}", r + 1, self.col_idx[k] + 1, self.values[k])?;
            }
        }
        Ok(())
    }

    pub fn read_matrix_market<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().map(|l| l.map_err(|e| Error::Format(e.to_string())));
        let header = lines.next().ok_or_else(|| Error::Format("empty file".into()))??;
        if !header.starts_with("%%MatrixMarket matrix coordinate real") {
            return Err(Error::Format("not a real coordinate MatrixMarket file".into()));
        }
        let mut size = None;
        let mut triples = Vec::new();
        for line in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            let f: Vec<&str> = t.split_whitespace().collect();
            let bad = || Error::Format(format!("bad line `{t}`"));
            if size.is_none() {
                let p = |i: usize| f.get(i).and_then(|s| s.parse::<usize>().ok()).ok_or_else(bad);
                size = Some((p(0)?, p(1)?));
                continue;
            }
            let r: usize = f.first().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let c: usize = f.get(1).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let v: f64 = f.get(2).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            if r == 0 || c == 0 {
                return Err(bad());
            }
            triples.push((r - 1, c - 1, v));
        }
        let (n_rows, n_cols) = size.ok_or_else(|| Error::Format("missing size line".into()))?;
        triples.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0; n_rows + 1];
        let mut col_idx = Vec::with_capacity(triples.len());
        let mut values: Vec<f64> = Vec::with_capacity(triples.len());
        let mut prev = None;
        for (r, c, v) in triples {
            if r >= n_rows || c >= n_cols {
                return Err(Error::Format(format!("entry ({}, {}) out of range", r + 1, c + 1)));
            }
            if prev == Some((r, c)) {
                *values.last_mut().expect("previous entry") += v;
                continue;
            }
            prev = Some((r, c));
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self { n_rows, n_cols, row_ptr, col_idx, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{local_to_global, StructuredMesh};

    #[test]
    fn pattern_and_accumulation() {
        let m = StructuredMesh::unit_square(1).unwrap();
        let l = local_to_global(&m, 1).unwrap();
        let mut a = CsrMatrix::from_pattern(&l);
        // 4 vertices; the diagonal couples everything except the off-diagonal corners.
        assert_eq!(a.nnz(), 14);
        a.add_element(l.cell(0), &[1.0; 9]).unwrap();
        a.add_element(l.cell(1), &[1.0; 9]).unwrap();
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.get(l.cell(0)[1], l.cell(0)[1]), 1.0);
        // (1,0) and (0,1) share no cell
        assert!(a.add(1, 3, 1.0).is_err());
    }

    #[test]
    fn matrix_market_round_trip() {
        let m = StructuredMesh::unit_square(2).unwrap();
        let l = local_to_global(&m, 2).unwrap();
        let mut a = CsrMatrix::from_pattern(&l);
        for (k, v) in a.values.iter_mut().enumerate() {
            *v = (k as f64).sin() * 1e-3 + 1.0 / 3.0;
        }
        let mut buf = Vec::new();
        a.write_matrix_market(&mut buf).unwrap();
        let b = CsrMatrix::read_matrix_market(buf.as_slice()).unwrap();
        assert_eq!(a, b);
    }
}
