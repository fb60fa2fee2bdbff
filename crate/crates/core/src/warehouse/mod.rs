//! Warehouse layout, order picking simulation and storage assignment policies.

mod objective;
mod policies;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use objective::PickDistance;
pub use policies::{
    policy_abc, policy_coi, policy_oos, policy_oos_traced, policy_qap_decomp, policy_random, qap_for_warehouse, DecompPolicyConfig, Policy,
    DEFAULT_ABC_CLASSES,
};

use crate::error::{parse_err, Error, Result};
use crate::matrix::Matrix;

/// Grid of `rows` × `columns` storage locations; aisle a serves columns 2a and 2a+1.
///
/// Location id = column·rows + row. The I/O point sits at row 0 in front of aisle 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub rows: usize,
    pub columns: usize,
    #[serde(default = "one")]
    pub row_spacing: f64,
    #[serde(default = "three")]
    pub column_spacing: f64,
}

fn one() -> f64 {
    1.0
}

fn three() -> f64 {
    3.0
}

impl Layout {
    pub fn new(rows: usize, columns: usize) -> Result<Self> {
        let l = Layout { rows, columns, row_spacing: 1.0, column_spacing: 3.0 };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.columns == 0 || !self.columns.is_multiple_of(2) {
            return Err(Error::Parameter(format!("layout needs rows >= 1 and an even column count, got {}x{}", self.rows, self.columns)));
        }
        if !(self.row_spacing > 0.0 && self.column_spacing > 0.0) {
            return Err(Error::Parameter("spacings must be positive".into()));
        }
        Ok(())
    }

    pub fn locations(&self) -> usize {
        self.rows * self.columns
    }

    pub fn aisles(&self) -> usize {
        self.columns / 2
    }

    pub fn location(&self, row: usize, column: usize) -> usize {
        column * self.rows + row
    }

    /// (row, column) of a location id.
    pub fn coords(&self, loc: usize) -> (usize, usize) {
        (loc % self.rows, loc / self.rows)
    }

    pub fn aisle_of(&self, loc: usize) -> usize {
        self.coords(loc).1 / 2
    }

    /// Cross-over cost between consecutive aisles.
    pub fn crossover(&self) -> f64 {
        2.0 * self.column_spacing
    }

    pub fn aisle_x(&self, aisle: usize) -> f64 {
        aisle as f64 * self.crossover()
    }

    pub fn aisle_length(&self) -> f64 {
        self.rows as f64 * self.row_spacing
    }

    pub fn row_y(&self, row: usize) -> f64 {
        row as f64 * self.row_spacing
    }

    /// Manhattan distance from the I/O point.
    pub fn io_distance(&self, loc: usize) -> f64 {
        let (r, c) = self.coords(loc);
        self.aisle_x(c / 2) + self.row_y(r)
    }

    pub fn column_map(&self) -> Vec<usize> {
        (0..self.locations()).map(|l| self.coords(l).1).collect()
    }
}

/// Customer orders, each a list of distinct SKU ids in `0..n_skus`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSet {
    n_skus: usize,
    orders: Vec<Vec<usize>>,
}

impl OrderSet {
    pub fn new(n_skus: usize, orders: Vec<Vec<usize>>) -> Result<Self> {
        for (i, o) in orders.iter().enumerate() {
            if let Some(&s) = o.iter().find(|&&s| s >= n_skus) {
                return Err(Error::Domain(format!("order {i} references SKU {s} outside 0..{n_skus}")));
            }
            let mut d = o.clone();
            d.sort_unstable();
            d.dedup();
            if d.len() != o.len() {
                return Err(Error::Domain(format!("order {i} repeats a SKU")));
            }
        }
        Ok(OrderSet { n_skus, orders })
    }

    pub fn n_skus(&self) -> usize {
        self.n_skus
    }

    pub fn orders(&self) -> &[Vec<usize>] {
        &self.orders
    }

    /// Number of orders containing each SKU.
    pub fn popularity(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.n_skus];
        for o in &self.orders {
            for &s in o {
                p[s] += 1.0;
            }
        }
        p
    }

    /// `order_id,sku` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("order_id,sku\n");
        for (i, o) in self.orders.iter().enumerate() {
            for &k in o {
                writeln!(s, "{i},{k}").unwrap();
            }
        }
        s
    }

    /// Parses `order_id,sku` rows; order ids must be contiguous from 0.
    pub fn from_csv(text: &str, n_skus: usize) -> Result<Self> {
        let mut orders: Vec<Vec<usize>> = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') || t == "order_id,sku" {
                continue;
            }
            let (a, b) = t.split_once(',').ok_or_else(|| parse_err(ln + 1, "expected `order_id,sku`"))?;
            let id: usize = a.trim().parse().map_err(|_| parse_err(ln + 1, "bad order id"))?;
            let sku: usize = b.trim().parse().map_err(|_| parse_err(ln + 1, "bad sku"))?;
            if id == orders.len() {
                orders.push(Vec::new());
            } else if id + 1 != orders.len() {
                return Err(parse_err(ln + 1, "order ids must be contiguous and grouped"));
            }
            orders[id].push(sku);
        }
        OrderSet::new(n_skus, orders)
    }
}

/// Item → location bijection plus item → SKU labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    location_of: Vec<usize>,
    item_sku: Vec<usize>,
}

impl Assignment {
    pub fn new(location_of: Vec<usize>, item_sku: Vec<usize>) -> Result<Self> {
        if location_of.len() != item_sku.len() {
            return Err(Error::Dimension { expected: item_sku.len(), got: location_of.len() });
        }
        if !crate::formulations::is_permutation(&location_of) {
            return Err(Error::Domain("assignment is not a bijection".into()));
        }
        Ok(Assignment { location_of, item_sku })
    }

    pub fn location_of(&self) -> &[usize] {
        &self.location_of
    }

    pub fn item_sku(&self) -> &[usize] {
        &self.item_sku
    }

    pub fn len(&self) -> usize {
        self.location_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.location_of.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("item_id,location_id\n");
        for (i, l) in self.location_of.iter().enumerate() {
            writeln!(s, "{i},{l}").unwrap();
        }
        s
    }
}

/// f_ij = number of orders containing both SKU(i) and SKU(j); zero for equal SKUs and on the diagonal.
pub fn build_frequency_matrix(orders: &OrderSet, item_sku: &[usize]) -> Result<Matrix> {
    if let Some(&s) = item_sku.iter().find(|&&s| s >= orders.n_skus()) {
        return Err(Error::Inventory(format!("item SKU {s} outside the order universe")));
    }
    let ns = orders.n_skus();
    let mut co = vec![0.0; ns * ns];
    for o in orders.orders() {
        for (a, &s) in o.iter().enumerate() {
            for &t in &o[a + 1..] {
                co[s * ns + t] += 1.0;
                co[t * ns + s] += 1.0;
            }
        }
    }
    let n = item_sku.len();
    Ok(Matrix::from_fn(n, n, |i, j| {
        let (s, t) = (item_sku[i], item_sku[j]);
        if i == j || s == t {
            0.0
        } else {
            co[s * ns + t]
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    Exact,
    Block { delta: f64, m: f64 },
    /// Both sides of an aisle are picked from the aisle itself; aisles connect
    /// through the nearer cross aisle (front or back).
    Aisle,
}

/// Location distance matrix; the diagonal holds I/O distances in both modes.
///
/// Exact mode: same column is row_spacing·|Δrow|; different columns go round the
/// far end of the aisles, column_spacing·|Δcolumn| + row_spacing·(2·rows − r1 − r2).
pub fn build_distance_matrix(layout: &Layout, mode: DistanceMode) -> Result<Matrix> {
    layout.validate()?;
    let n = layout.locations();
    Ok(Matrix::from_fn(n, n, |a, b| {
        if a == b {
            return layout.io_distance(a);
        }
        let (r1, c1) = layout.coords(a);
        let (r2, c2) = layout.coords(b);
        match mode {
            DistanceMode::Block { delta, m } => {
                if c1 == c2 {
                    delta
                } else {
                    m
                }
            }
            DistanceMode::Aisle => {
                let (a1, a2) = (c1 / 2, c2 / 2);
                if a1 == a2 {
                    layout.row_spacing * r1.abs_diff(r2) as f64
                } else {
                    let rows = (r1 + r2).min(2 * layout.rows - r1 - r2);
                    layout.crossover() * a1.abs_diff(a2) as f64 + layout.row_spacing * rows as f64
                }
            }
            DistanceMode::Exact => {
                if c1 == c2 {
                    layout.row_spacing * r1.abs_diff(r2) as f64
                } else {
                    layout.column_spacing * c1.abs_diff(c2) as f64
                        + layout.row_spacing * (2 * layout.rows - r1 - r2) as f64
                }
            }
        }
    }))
}

/// Route length of one order given the required location per ordered SKU.
///
/// Aisles before the last required aisle are traversed end to end in
/// alternating direction. In the last aisle the picker goes to the farthest
/// required row and back when entering from the front; entering from the far
/// end it walks the aisle down to the front. It then returns to I/O.
pub fn route_from_locations(layout: &Layout, required: impl IntoIterator<Item = usize>) -> f64 {
    let mut last: Option<usize> = None;
    let mut far_row = 0usize;
    for loc in required {
        let (r, c) = layout.coords(loc);
        let a = c / 2;
        match last {
            Some(l) if a < l => {}
            Some(l) if a == l => far_row = far_row.max(r),
            _ => {
                last = Some(a);
                far_row = r;
            }
        }
    }
    let Some(a) = last else { return 0.0 };
    let full = a as f64 * (layout.aisle_length() + layout.crossover());
    let back = layout.aisle_x(a);
    let in_last = if a % 2 == 0 { 2.0 * layout.row_y(far_row) } else { layout.aisle_length() };
    full + in_last + back
}

/// Required location per SKU: the assigned item location nearest to I/O (None if unstocked).
pub fn required_locations(assignment: &Assignment, layout: &Layout, n_skus: usize) -> Vec<Option<usize>> {
    let mut best: Vec<Option<usize>> = vec![None; n_skus];
    for (item, &loc) in assignment.location_of().iter().enumerate() {
        let s = assignment.item_sku()[item];
        if s >= n_skus {
            continue;
        }
        let better = match best[s] {
            None => true,
            Some(cur) => {
                let (d, dc) = (layout.io_distance(loc), layout.io_distance(cur));
                d < dc || (d == dc && loc < cur)
            }
        };
        if better {
            best[s] = Some(loc);
        }
    }
    best
}

fn check_fit(assignment: &Assignment, layout: &Layout) -> Result<()> {
    if assignment.len() != layout.locations() {
        return Err(Error::Dimension { expected: layout.locations(), got: assignment.len() });
    }
    Ok(())
}

pub fn sshape_route_length(order: &[usize], assignment: &Assignment, layout: &Layout) -> Result<f64> {
    check_fit(assignment, layout)?;
    let n_skus = order.iter().copied().max().map_or(0, |m| m + 1).max(assignment.item_sku().iter().copied().max().map_or(0, |m| m + 1));
    let req = required_locations(assignment, layout, n_skus);
    route_for(order, &req, layout)
}

fn route_for(order: &[usize], req: &[Option<usize>], layout: &Layout) -> Result<f64> {
    let mut locs = Vec::with_capacity(order.len());
    for &s in order {
        match req.get(s).copied().flatten() {
            Some(l) => locs.push(l),
            None => return Err(Error::Inventory(format!("SKU {s} has no assigned item"))),
        }
    }
    Ok(route_from_locations(layout, locs))
}

/// Per-order route lengths, in order.
pub fn route_lengths(orders: &OrderSet, assignment: &Assignment, layout: &Layout) -> Result<Vec<f64>> {
    check_fit(assignment, layout)?;
    let req = required_locations(assignment, layout, orders.n_skus());
    orders.orders().iter().map(|o| route_for(o, &req, layout)).collect()
}

pub fn total_pick_distance(orders: &OrderSet, assignment: &Assignment, layout: &Layout) -> Result<f64> {
    Ok(route_lengths(orders, assignment, layout)?.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(n: usize) -> Assignment {
        Assignment::new((0..n).collect(), (0..n).collect()).unwrap()
    }

    #[test]
    fn layout_geometry() {
        let l = Layout::new(45, 6).unwrap();
        assert_eq!((l.locations(), l.aisles()), (270, 3));
        assert_eq!(l.coords(l.location(10, 5)), (10, 5));
        assert_eq!(l.io_distance(l.location(10, 3)), 6.0 + 10.0);
        assert!(Layout::new(4, 3).is_err());
    }

    #[test]
    fn frequency_examples() {
        let o = OrderSet::new(2, vec![vec![0, 1]]).unwrap();
        let f = build_frequency_matrix(&o, &[0, 1]).unwrap();
        assert_eq!((f.get(0, 1), f.get(1, 0), f.get(0, 0)), (1.0, 1.0, 0.0));
        let o = OrderSet::new(3, vec![vec![0], vec![1], vec![2]]).unwrap();
        assert!(build_frequency_matrix(&o, &[0, 1, 2]).unwrap().data().iter().all(|v| *v == 0.0));
        let same = build_frequency_matrix(&OrderSet::new(2, vec![vec![0, 1]]).unwrap(), &[0, 0, 1]).unwrap();
        assert_eq!(same.get(0, 1), 0.0);
        assert_eq!(same.get(1, 2), 1.0);
    }

    #[test]
    fn block_distance_toy() {
        let l = Layout::new(4, 2).unwrap();
        let d = build_distance_matrix(&l, DistanceMode::Block { delta: 1.0, m: 8.0 }).unwrap();
        for a in 0..8 {
            for b in 0..8 {
                let v = d.get(a, b);
                if a == b {
                    assert_eq!(v, l.io_distance(a));
                } else if l.coords(a).1 == l.coords(b).1 {
                    assert_eq!(v, 1.0);
                } else {
                    assert_eq!(v, 8.0);
                }
            }
        }
    }

    #[test]
    fn exact_distance_rules() {
        let l = Layout::new(10, 2).unwrap();
        let d = build_distance_matrix(&l, DistanceMode::Exact).unwrap();
        assert_eq!(d.get(l.location(2, 0), l.location(5, 0)), 3.0);
        let toy = Layout::new(4, 2).unwrap();
        let d = build_distance_matrix(&toy, DistanceMode::Exact).unwrap();
        let mut same_max: f64 = 0.0;
        let mut cross_min = f64::INFINITY;
        for a in 0..8 {
            for b in 0..8 {
                if a == b {
                    continue;
                }
                let (ra, ca) = toy.coords(a);
                let (rb, cb) = toy.coords(b);
                if ca == cb {
                    assert_eq!(d.get(a, b), ra.abs_diff(rb) as f64);
                    same_max = same_max.max(d.get(a, b));
                } else {
                    cross_min = cross_min.min(d.get(a, b));
                }
            }
        }
        assert!(cross_min > same_max);
    }

    #[test]
    fn aisle_distance_rules() {
        let l = Layout::new(10, 4).unwrap();
        let d = build_distance_matrix(&l, DistanceMode::Aisle).unwrap();
        // both faces of aisle 0
        assert_eq!(d.get(l.location(2, 0), l.location(5, 1)), 3.0);
        assert_eq!(d.get(l.location(4, 0), l.location(4, 1)), 0.0);
        // front cross aisle is shorter for low rows, back for high rows
        assert_eq!(d.get(l.location(2, 1), l.location(3, 2)), 6.0 + 5.0);
        assert_eq!(d.get(l.location(8, 0), l.location(9, 3)), 6.0 + 3.0);
        for a in 0..l.locations() {
            assert_eq!(d.get(a, a), l.io_distance(a));
            for b in 0..l.locations() {
                assert_eq!(d.get(a, b), d.get(b, a));
            }
        }
    }

    #[test]
    fn route_examples() {
        let l = Layout::new(45, 2).unwrap();
        let a = identity(90);
        assert_eq!(sshape_route_length(&[], &a, &l).unwrap(), 0.0);
        assert_eq!(sshape_route_length(&[l.location(10, 0)], &a, &l).unwrap(), 20.0);
        assert_eq!(sshape_route_length(&[l.location(10, 1)], &a, &l).unwrap(), 20.0);
    }

    #[test]
    fn route_traverses_empty_aisle() {
        // aisles 0 and 2 hold items; aisle 1 is walked anyway
        let l = Layout::new(10, 6).unwrap();
        let a = identity(60);
        let order = [l.location(3, 0), l.location(7, 4)];
        // two full aisles (10 each) + two crossovers (6 each) + up/down to row 7 + 12 back
        assert_eq!(sshape_route_length(&order, &a, &l).unwrap(), 20.0 + 12.0 + 14.0 + 12.0);
        // last aisle odd: entered from the far end
        let order = [l.location(3, 2)];
        assert_eq!(sshape_route_length(&order, &a, &l).unwrap(), 10.0 + 6.0 + 10.0 + 6.0);
    }

    #[test]
    fn route_missing_sku_is_inventory_error() {
        let l = Layout::new(2, 2).unwrap();
        let a = Assignment::new(vec![0, 1, 2, 3], vec![0, 0, 1, 1]).unwrap();
        assert!(matches!(sshape_route_length(&[2], &a, &l), Err(Error::Inventory(_))));
    }

    #[test]
    fn total_is_additive() {
        let l = Layout::new(5, 4).unwrap();
        let a = identity(20);
        let one = OrderSet::new(20, vec![vec![3, 12, 7]]).unwrap();
        let two = OrderSet::new(20, vec![vec![3, 12, 7], vec![3, 12, 7]]).unwrap();
        let d1 = total_pick_distance(&one, &a, &l).unwrap();
        assert_eq!(total_pick_distance(&two, &a, &l).unwrap(), 2.0 * d1);
        assert_eq!(total_pick_distance(&OrderSet::new(20, vec![]).unwrap(), &a, &l).unwrap(), 0.0);
    }

    #[test]
    fn orders_csv_round_trip() {
        let o = OrderSet::new(5, vec![vec![1, 4], vec![0], vec![2, 3, 4]]).unwrap();
        assert_eq!(OrderSet::from_csv(&o.to_csv(), 5).unwrap(), o);
        assert!(OrderSet::from_csv("0,1\n2,3\n", 5).is_err());
        assert!(OrderSet::new(3, vec![vec![1, 1]]).is_err());
    }
}
