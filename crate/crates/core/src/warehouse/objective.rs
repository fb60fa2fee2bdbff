use super::{route_from_locations, Layout, OrderSet};
use crate::error::{Error, Result};
use crate::solvers::PermutationObjective;

/// Total S-shape pick distance as a permutation objective over item → location.
///
/// Keeps per-SKU required locations and per-order route lengths so a swap only
/// re-routes the orders that contain one of the two swapped SKUs.
pub struct PickDistance<'a> {
    layout: &'a Layout,
    orders: &'a OrderSet,
    item_sku: Vec<usize>,
    io: Vec<f64>,
    sku_items: Vec<Vec<usize>>,
    sku_orders: Vec<Vec<usize>>,
    req: Vec<Option<usize>>,
    route: Vec<f64>,
    stamp: Vec<u64>,
    clock: u64,
    pending: Option<Pending>,
}

struct Pending {
    pair: (usize, usize),
    req: Vec<(usize, Option<usize>)>,
    routes: Vec<(usize, f64)>,
}

impl<'a> PickDistance<'a> {
    pub fn new(layout: &'a Layout, orders: &'a OrderSet, item_sku: &[usize]) -> Result<Self> {
        layout.validate()?;
        if item_sku.len() != layout.locations() {
            return Err(Error::Dimension { expected: layout.locations(), got: item_sku.len() });
        }
        let ns = orders.n_skus();
        let mut sku_items = vec![Vec::new(); ns];
        for (i, &s) in item_sku.iter().enumerate() {
            if s >= ns {
                return Err(Error::Inventory(format!("item SKU {s} outside the order universe")));
            }
            sku_items[s].push(i);
        }
        let mut sku_orders = vec![Vec::new(); ns];
        for (o, lines) in orders.orders().iter().enumerate() {
            for &s in lines {
                if sku_items[s].is_empty() {
                    return Err(Error::Inventory(format!("SKU {s} has no assigned item")));
                }
                sku_orders[s].push(o);
            }
        }
        Ok(PickDistance {
            layout,
            orders,
            item_sku: item_sku.to_vec(),
            io: (0..layout.locations()).map(|l| layout.io_distance(l)).collect(),
            sku_items,
            sku_orders,
            req: vec![None; ns],
            route: vec![0.0; orders.orders().len()],
            stamp: vec![0; orders.orders().len()],
            clock: 0,
            pending: None,
        })
    }

    fn nearest(&self, s: usize, loc: impl Fn(usize) -> usize) -> Option<usize> {
        self.sku_items[s].iter().map(|&i| loc(i)).min_by(|&a, &b| self.io[a].total_cmp(&self.io[b]).then(a.cmp(&b)))
    }

    fn route_with(&self, o: usize, overlay: &[(usize, Option<usize>)]) -> f64 {
        let locs = self.orders.orders()[o].iter().map(|&s| {
            overlay.iter().find(|(t, _)| *t == s).map_or(self.req[s], |(_, l)| *l).expect("stocked SKU")
        });
        route_from_locations(self.layout, locs)
    }

    fn plan_swap(&mut self, perm: &[usize], a: usize, b: usize) -> Pending {
        let (sa, sb) = (self.item_sku[a], self.item_sku[b]);
        let at = |i: usize| if i == a { perm[b] } else if i == b { perm[a] } else { perm[i] };
        let mut req = Vec::with_capacity(2);
        if sa != sb {
            for s in [sa, sb] {
                let l = self.nearest(s, at);
                if l != self.req[s] {
                    req.push((s, l));
                }
            }
        }
        self.clock += 1;
        let mut routes = Vec::new();
        for &(s, _) in &req {
            for &o in &self.sku_orders[s] {
                if self.stamp[o] != self.clock {
                    self.stamp[o] = self.clock;
                    routes.push((o, 0.0));
                }
            }
        }
        for r in routes.iter_mut() {
            r.1 = self.route_with(r.0, &req);
        }
        Pending { pair: (a, b), req, routes }
    }
}

impl PermutationObjective for PickDistance<'_> {
    fn size(&self) -> usize {
        self.item_sku.len()
    }

    fn evaluate(&mut self, perm: &[usize]) -> f64 {
        for s in 0..self.req.len() {
            self.req[s] = self.nearest(s, |i| perm[i]);
        }
        for o in 0..self.route.len() {
            self.route[o] = self.route_with(o, &[]);
        }
        self.pending = None;
        self.route.iter().sum()
    }

    fn swap_delta(&mut self, perm: &[usize], a: usize, b: usize) -> f64 {
        let p = self.plan_swap(perm, a, b);
        let d = p.routes.iter().map(|&(o, r)| r - self.route[o]).sum();
        self.pending = Some(p);
        d
    }

    fn commit_swap(&mut self, perm: &[usize], a: usize, b: usize) {
        let p = match self.pending.take() {
            Some(p) if p.pair == (a, b) => p,
            _ => {
                // perm is already swapped; planning the same swap again undoes it
                let mut before = perm.to_vec();
                before.swap(a, b);
                self.plan_swap(&before, a, b)
            }
        };
        for (s, l) in p.req {
            self.req[s] = l;
        }
        for (o, r) in p.routes {
            self.route[o] = r;
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::seq::SliceRandom;
    use rand::Rng;

    use super::*;
    use crate::generators::{gen_orders, Skew};
    use crate::rng::stream;
    use crate::warehouse::{total_pick_distance, Assignment};

    fn recompute(layout: &Layout, orders: &OrderSet, item_sku: &[usize], perm: &[usize]) -> f64 {
        let a = Assignment::new(perm.to_vec(), item_sku.to_vec()).unwrap();
        total_pick_distance(orders, &a, layout).unwrap()
    }

    #[test]
    fn swap_delta_matches_recompute() {
        let layout = Layout::new(6, 4).unwrap();
        let n = layout.locations();
        // two items per SKU exercises the nearest-item rule
        let item_sku: Vec<usize> = (0..n).map(|i| i / 2).collect();
        let orders = gen_orders(n / 2, 15, 3, Skew::Pareto8020, 5).unwrap();
        let mut obj = PickDistance::new(&layout, &orders, &item_sku).unwrap();
        let mut rng = stream(9, "test", 0);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let mut e = obj.evaluate(&perm);
        assert!((e - recompute(&layout, &orders, &item_sku, &perm)).abs() < 1e-9);
        for step in 0..400 {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            let d = obj.swap_delta(&perm, a, b);
            let mut next = perm.clone();
            next.swap(a, b);
            let want = recompute(&layout, &orders, &item_sku, &next) - e;
            assert!((d - want).abs() < 1e-9, "step {step}: {d} vs {want}");
            if step % 3 != 0 {
                perm = next;
                obj.commit_swap(&perm, a, b);
                e += d;
            }
        }
        assert!((obj.evaluate(&perm) - e).abs() < 1e-9);
    }

    #[test]
    fn rejects_inventory_gaps() {
        let layout = Layout::new(2, 2).unwrap();
        let orders = OrderSet::new(5, vec![vec![4]]).unwrap();
        assert!(PickDistance::new(&layout, &orders, &[0, 1, 2, 3]).is_err());
        assert!(PickDistance::new(&layout, &orders, &[0, 1, 2]).is_err());
    }
}
