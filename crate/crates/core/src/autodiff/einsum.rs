//! Two-operand index contraction in einsum notation (`"ij,jk->ik"`).

use crate::error::{Error, Result};

/// Parsed contraction descriptor. Every letter names one axis; letters
/// shared by both operands are paired, letters absent from the output are
/// summed over.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractionSpec {
    lhs: Vec<char>,
    rhs: Vec<char>,
    out: Vec<char>,
}

impl ContractionSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        let spec: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
        let (inputs, out) = spec
            .split_once("->")
            .ok_or_else(|| Error::usage(format!("contraction `{spec}` is missing `->`")))?;
        let (lhs, rhs) = inputs.split_once(',').ok_or_else(|| {
            Error::usage(format!("contraction `{spec}` needs exactly two operands"))
        })?;
        let parse_side = |s: &str, what: &str| -> Result<Vec<char>> {
            let letters: Vec<char> = s.chars().collect();
            for (i, c) in letters.iter().enumerate() {
                if !c.is_ascii_alphabetic() {
                    return Err(Error::usage(format!("bad axis label `{c}` in {what}")));
                }
                if letters[..i].contains(c) {
                    return Err(Error::usage(format!(
                        "axis `{c}` appears twice in {what} of `{spec}`"
                    )));
                }
            }
            Ok(letters)
        };
        let lhs = parse_side(lhs, "the first operand")?;
        let rhs = parse_side(rhs, "the second operand")?;
        let out = parse_side(out, "the output")?;
        for c in &out {
            if !lhs.contains(c) && !rhs.contains(c) {
                return Err(Error::usage(format!(
                    "output axis `{c}` does not appear in any operand of `{spec}`"
                )));
            }
        }
        Ok(Self { lhs, rhs, out })
    }

    /// Resolves axis sizes against concrete operand shapes.
    pub(crate) fn plan(&self, a: &[usize], b: &[usize]) -> Result<ContractionPlan> {
        if a.len() != self.lhs.len() {
            return Err(Error::shape(format!(
                "first operand has rank {} but the contraction names {} axes",
                a.len(),
                self.lhs.len()
            )));
        }
        if b.len() != self.rhs.len() {
            return Err(Error::shape(format!(
                "second operand has rank {} but the contraction names {} axes",
                b.len(),
                self.rhs.len()
            )));
        }
        // output letters first, then every remaining (summed) letter
        let mut letters = self.out.clone();
        for c in self.lhs.iter().chain(self.rhs.iter()) {
            if !letters.contains(c) {
                letters.push(*c);
            }
        }
        let mut dims = Vec::with_capacity(letters.len());
        for c in &letters {
            let in_a = self.lhs.iter().position(|x| x == c).map(|i| (i, a[i]));
            let in_b = self.rhs.iter().position(|x| x == c).map(|i| (i, b[i]));
            let dim = match (in_a, in_b) {
                (Some((ia, da)), Some((ib, db))) => {
                    if da != db {
                        return Err(Error::shape(format!(
                            "axis `{c}` has size {da} on axis {ia} of the first operand \
                             but {db} on axis {ib} of the second"
                        )));
                    }
                    da
                }
                (Some((_, d)), None) | (None, Some((_, d))) => d,
                (None, None) => unreachable!("letters come from the operands"),
            };
            dims.push(dim);
        }
        let strides_for = |side: &[char], shape: &[usize]| -> Vec<usize> {
            let mut own = vec![0usize; side.len()];
            let mut acc = 1;
            for i in (0..side.len()).rev() {
                own[i] = acc;
                acc *= shape[i];
            }
            letters
                .iter()
                .map(|c| side.iter().position(|x| x == c).map_or(0, |i| own[i]))
                .collect()
        };
        let out_shape: Vec<usize> = dims[..self.out.len()].to_vec();
        let sa = strides_for(&self.lhs, a);
        let sb = strides_for(&self.rhs, b);
        let so = strides_for(&self.out, &out_shape);
        Ok(ContractionPlan {
            dims,
            sa,
            sb,
            so,
            out_shape,
        })
    }
}

#[derive(Clone, Debug)]
pub(crate) struct ContractionPlan {
    dims: Vec<usize>,
    sa: Vec<usize>,
    sb: Vec<usize>,
    so: Vec<usize>,
    pub(crate) out_shape: Vec<usize>,
}

impl ContractionPlan {
    /// Visits every joint index assignment as (offset_a, offset_b, offset_out).
    fn for_each(&self, mut f: impl FnMut(usize, usize, usize)) {
        if self.dims.iter().any(|&d| d == 0) {
            return;
        }
        let n = self.dims.len();
        let mut idx = vec![0usize; n];
        let (mut ia, mut ib, mut io) = (0usize, 0usize, 0usize);
        loop {
            f(ia, ib, io);
            // odometer increment, innermost letter last
            let mut axis = n;
            loop {
                if axis == 0 {
                    return;
                }
                axis -= 1;
                idx[axis] += 1;
                ia += self.sa[axis];
                ib += self.sb[axis];
                io += self.so[axis];
                if idx[axis] < self.dims[axis] {
                    break;
                }
                ia -= self.sa[axis] * idx[axis];
                ib -= self.sb[axis] * idx[axis];
                io -= self.so[axis] * idx[axis];
                idx[axis] = 0;
            }
        }
    }

    pub(crate) fn forward(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_shape.iter().product()];
        self.for_each(|ia, ib, io| out[io] += a[ia] * b[ib]);
        out
    }

    pub(crate) fn backward(&self, a: &[f64], b: &[f64], grad: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut ga = vec![0.0; a.len()];
        let mut gb = vec![0.0; b.len()];
        self.for_each(|ia, ib, io| {
            ga[ia] += grad[io] * b[ib];
            gb[ib] += grad[io] * a[ia];
        });
        (ga, gb)
    }
}
