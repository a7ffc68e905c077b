/// Affine form `Σ cᵢ xᵢ + constant` over the SDP variable vector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn var(index: usize) -> Self {
        Self {
            terms: vec![(index, 1.0)],
            constant: 0.0,
        }
    }

    pub fn constant(value: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: value,
        }
    }

    pub fn add_scaled(&mut self, other: &LinExpr, factor: f64) {
        if factor == 0.0 {
            return;
        }
        self.terms
            .extend(other.terms.iter().map(|&(k, v)| (k, v * factor)));
        self.constant += other.constant * factor;
    }

    pub fn add_term(&mut self, index: usize, coef: f64) {
        if coef != 0.0 {
            self.terms.push((index, coef));
        }
    }

    /// Merges repeated indices and drops zeros.
    pub fn simplify(mut self) -> Self {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for (k, v) in self.terms {
            match out.last_mut() {
                Some(last) if last.0 == k => last.1 += v,
                _ => out.push((k, v)),
            }
        }
        out.retain(|t| t.1.abs() > 1e-15);
        self.terms = out;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(k, v)| v * x[k]).sum::<f64>()
    }
}
