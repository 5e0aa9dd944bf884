use super::op::add_bias;
use super::weights::LayerLayout;
use crate::basis::BasisCache;
use crate::error::{Error, Result};

/// One subgraph's equivariant linear update.
///
/// `x` holds `(order, m^order x c_in)` tensors matching `layout.input`;
/// `w` is one bucket's flat weights. Returns `(order, m^order x c_out)`
/// tensors for every output order, biases included.
pub fn subgraph_linear(
    x: &[(usize, Vec<f64>)],
    m: usize,
    layout: &LayerLayout,
    w: &[f64],
) -> Result<Vec<(usize, Vec<f64>)>> {
    if w.len() != layout.len {
        return Err(Error::shape(format!(
            "weights have {} values, layout needs {}",
            w.len(),
            layout.len
        )));
    }
    let orders: Vec<usize> = x.iter().map(|(k, _)| *k).collect();
    if orders != layout.input.orders().collect::<Vec<_>>() {
        return Err(Error::shape(format!(
            "input orders {orders:?} do not match the layer's {:?}",
            layout.input.orders().collect::<Vec<_>>()
        )));
    }
    let cache = BasisCache::global();
    let mut out = Vec::new();
    for &(k_out, c_out) in layout.output.entries() {
        let mut y = vec![0.0; m.pow(k_out as u32) * c_out];
        for (k_in, xs) in x {
            let block = layout.block(*k_in, k_out).expect("block in layout");
            cache
                .kernel(*k_in, k_out)
                .forward(m, 1, xs, block.c_in, &w[block.range()], c_out, &mut y)?;
        }
        add_bias(&mut y, &w[layout.bias(k_out).expect("bias").range()], k_out, m, c_out);
        out.push((k_out, y));
    }
    Ok(out)
}
