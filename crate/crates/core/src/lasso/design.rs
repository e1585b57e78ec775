//! Column access for coordinate descent.

/// Column-oriented design matrix as seen by the coordinate-descent solver.
pub trait Design: Sync {
    fn n_rows(&self) -> usize;
    fn n_cols(&self) -> usize;
    /// `Σ_i x_ij v_i`
    fn dot(&self, j: usize, v: &[f64]) -> f64;
    /// `Σ_i w_i x_ij v_i`
    fn weighted_dot(&self, j: usize, w: &[f64], v: &[f64]) -> f64;
    /// `Σ_i w_i x_ij²`
    fn weighted_sq(&self, j: usize, w: &[f64]) -> f64;
    /// Row-major `cols.len()²` matrix `G[a][b] = Σ_i w_i x_{i,cols[a]} x_{i,cols[b]}`.
    fn weighted_gram(&self, cols: &[usize], w: &[f64]) -> Vec<f64>;
    /// `v += a · x_j`
    fn axpy(&self, j: usize, a: f64, v: &mut [f64]);
    /// The same columns restricted to `rows`, in that order.
    fn subset(&self, rows: &[usize]) -> Self
    where
        Self: Sized;
    fn is_finite(&self) -> bool {
        true
    }
}

/// 0/1 matrix stored as the sorted row indices of the ones in each column.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryDesign {
    n_rows: usize,
    columns: Vec<Vec<u32>>,
}

impl BinaryDesign {
    pub fn new(n_rows: usize, columns: Vec<Vec<u32>>) -> Self {
        debug_assert!(columns.iter().all(|c| c.windows(2).all(|w| w[0] < w[1])
            && c.last().is_none_or(|&r| (r as usize) < n_rows)));
        BinaryDesign { n_rows, columns }
    }

    pub fn from_dense(rows: &[Vec<u8>]) -> Self {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut columns = vec![Vec::new(); n_cols];
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if v != 0 {
                    columns[j].push(i as u32);
                }
            }
        }
        BinaryDesign::new(rows.len(), columns)
    }

    pub fn column(&self, j: usize) -> &[u32] {
        &self.columns[j]
    }
}

impl Design for BinaryDesign {
    fn n_rows(&self) -> usize {
        self.n_rows
    }

    fn n_cols(&self) -> usize {
        self.columns.len()
    }

    #[inline]
    fn dot(&self, j: usize, v: &[f64]) -> f64 {
        self.columns[j].iter().map(|&i| v[i as usize]).sum()
    }

    #[inline]
    fn weighted_dot(&self, j: usize, w: &[f64], v: &[f64]) -> f64 {
        self.columns[j]
            .iter()
            .map(|&i| w[i as usize] * v[i as usize])
            .sum()
    }

    #[inline]
    fn weighted_sq(&self, j: usize, w: &[f64]) -> f64 {
        self.dot(j, w)
    }

    fn weighted_gram(&self, cols: &[usize], w: &[f64]) -> Vec<f64> {
        let k = cols.len();
        let mut g = vec![0.0; k * k];
        let mut scattered = vec![0.0; self.n_rows];
        for (a, &ja) in cols.iter().enumerate() {
            for &i in &self.columns[ja] {
                scattered[i as usize] = w[i as usize];
            }
            for (b, &jb) in cols.iter().enumerate().skip(a) {
                let v: f64 = self.columns[jb]
                    .iter()
                    .map(|&i| scattered[i as usize])
                    .sum();
                g[a * k + b] = v;
                g[b * k + a] = v;
            }
            for &i in &self.columns[ja] {
                scattered[i as usize] = 0.0;
            }
        }
        g
    }

    #[inline]
    fn axpy(&self, j: usize, a: f64, v: &mut [f64]) {
        for &i in &self.columns[j] {
            v[i as usize] += a;
        }
    }

    fn subset(&self, rows: &[usize]) -> Self {
        let mut position = vec![u32::MAX; self.n_rows];
        for (new, &old) in rows.iter().enumerate() {
            position[old] = new as u32;
        }
        let columns = self
            .columns
            .iter()
            .map(|col| {
                let mut out: Vec<u32> = col
                    .iter()
                    .map(|&i| position[i as usize])
                    .filter(|&p| p != u32::MAX)
                    .collect();
                out.sort_unstable();
                out
            })
            .collect();
        BinaryDesign {
            n_rows: rows.len(),
            columns,
        }
    }
}

/// Dense column-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseDesign {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl DenseDesign {
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut values = vec![0.0; n_rows * n_cols];
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n_cols, "ragged rows");
            for (j, &v) in r.iter().enumerate() {
                values[j * n_rows + i] = v;
            }
        }
        DenseDesign {
            n_rows,
            n_cols,
            values,
        }
    }

    pub fn from_columns(n_rows: usize, columns: Vec<Vec<f64>>) -> Self {
        let n_cols = columns.len();
        let mut values = Vec::with_capacity(n_rows * n_cols);
        for c in columns {
            assert_eq!(c.len(), n_rows, "column length mismatch");
            values.extend(c);
        }
        DenseDesign {
            n_rows,
            n_cols,
            values,
        }
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.values[j * self.n_rows..(j + 1) * self.n_rows]
    }
}

impl Design for DenseDesign {
    fn n_rows(&self) -> usize {
        self.n_rows
    }

    fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    fn dot(&self, j: usize, v: &[f64]) -> f64 {
        self.column(j).iter().zip(v).map(|(x, v)| x * v).sum()
    }

    #[inline]
    fn weighted_dot(&self, j: usize, w: &[f64], v: &[f64]) -> f64 {
        self.column(j)
            .iter()
            .zip(w)
            .zip(v)
            .map(|((x, w), v)| x * w * v)
            .sum()
    }

    #[inline]
    fn weighted_sq(&self, j: usize, w: &[f64]) -> f64 {
        self.column(j).iter().zip(w).map(|(x, w)| w * x * x).sum()
    }

    fn weighted_gram(&self, cols: &[usize], w: &[f64]) -> Vec<f64> {
        let k = cols.len();
        let mut g = vec![0.0; k * k];
        for a in 0..k {
            let ca = self.column(cols[a]);
            let wa: Vec<f64> = ca.iter().zip(w).map(|(x, w)| x * w).collect();
            for b in a..k {
                let v: f64 = wa
                    .iter()
                    .zip(self.column(cols[b]))
                    .map(|(u, x)| u * x)
                    .sum();
                g[a * k + b] = v;
                g[b * k + a] = v;
            }
        }
        g
    }

    #[inline]
    fn axpy(&self, j: usize, a: f64, v: &mut [f64]) {
        for (vi, x) in v.iter_mut().zip(self.column(j)) {
            *vi += a * x;
        }
    }

    fn subset(&self, rows: &[usize]) -> Self {
        let columns = (0..self.n_cols)
            .map(|j| {
                let c = self.column(j);
                rows.iter().map(|&i| c[i]).collect()
            })
            .collect();
        DenseDesign::from_columns(rows.len(), columns)
    }

    fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
