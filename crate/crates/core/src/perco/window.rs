use std::sync::Arc;

use crate::cayley::{CayleyBall, STUB};
use crate::error::PercoError;

/// A finite graph with a distinguished origin and outer shell.
#[derive(Clone, Debug)]
pub struct PercWindow {
    offsets: Vec<u32>,
    targets: Vec<u32>,
    origin: usize,
    shell: Vec<bool>,
    ball: Option<Arc<CayleyBall>>,
    shape: Option<(usize, u32)>,
}

impl PercWindow {
    /// The ball itself; the shell is the sphere of maximal radius.
    pub fn from_ball(ball: Arc<CayleyBall>) -> Self {
        let n = ball.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(n * ball.degree());
        offsets.push(0);
        for v in 0..n {
            targets.extend(
                ball.neighbor_slots(v)
                    .iter()
                    .copied()
                    .filter(|&w| w != STUB),
            );
            offsets.push(targets.len() as u32);
        }
        let shell = (0..n).map(|v| ball.is_shell(v)).collect();
        PercWindow {
            offsets,
            targets,
            origin: 0,
            shell,
            ball: Some(ball),
            shape: None,
        }
    }

    /// The box `{-L..L}^d` in `ℤ^d` with nearest-neighbour edges; the shell
    /// is `max |x_i| = L`.
    pub fn z_box(d: usize, half_width: u32) -> Result<Self, PercoError> {
        if d == 0 || half_width == 0 {
            return Err(PercoError::BadModel(
                "box needs d >= 1 and half-width >= 1".into(),
            ));
        }
        let side = 2 * half_width as usize + 1;
        let n = side
            .checked_pow(d as u32)
            .filter(|&n| n < u32::MAX as usize)
            .ok_or_else(|| PercoError::BadModel("box too large".into()))?;
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(2 * d * n);
        let mut shell = vec![false; n];
        let mut coords = vec![0usize; d];
        offsets.push(0);
        for v in 0..n {
            let mut rem = v;
            for c in coords.iter_mut() {
                *c = rem % side;
                rem /= side;
            }
            let mut stride = 1usize;
            for &c in &coords {
                if c > 0 {
                    targets.push((v - stride) as u32);
                }
                if c + 1 < side {
                    targets.push((v + stride) as u32);
                }
                stride *= side;
            }
            shell[v] = coords.iter().any(|&c| c == 0 || c + 1 == side);
            offsets.push(targets.len() as u32);
        }
        let origin = (n - 1) / 2;
        Ok(PercWindow {
            offsets,
            targets,
            origin,
            shell,
            ball: None,
            shape: Some((d, half_width)),
        })
    }

    pub fn len(&self) -> usize {
        self.shell.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shell.is_empty()
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }

    pub fn is_shell(&self, v: usize) -> bool {
        self.shell[v]
    }

    pub fn shell(&self) -> &[bool] {
        &self.shell
    }

    pub fn interior(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| !self.shell[v]).collect()
    }

    pub fn ball(&self) -> Option<&Arc<CayleyBall>> {
        self.ball.as_ref()
    }

    /// `(d, L)` for box windows.
    pub fn box_shape(&self) -> Option<(usize, u32)> {
        self.shape
    }

    /// Vertex of a box window at the given coordinates.
    pub fn index_of_coords(&self, x: &[i64]) -> Option<usize> {
        let (d, l) = self.shape?;
        if x.len() != d {
            return None;
        }
        let side = 2 * l as i64 + 1;
        let mut v = 0i64;
        for &c in x.iter().rev() {
            if c.abs() > l as i64 {
                return None;
            }
            v = v * side + c + l as i64;
        }
        Some(v as usize)
    }

    /// Opposite faces `x_1 = -L` and `x_1 = L` of a box window.
    pub fn faces(&self) -> Option<(Vec<usize>, Vec<bool>)> {
        let (_, l) = self.shape?;
        let side = 2 * l as usize + 1;
        let low = (0..self.len()).filter(|v| v % side == 0).collect();
        let high = (0..self.len()).map(|v| v % side == side - 1).collect();
        Some((low, high))
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cayley::build_ball;
    use crate::group::{standard_generators, GroupModel};

    #[test]
    fn box_shape() {
        let w = PercWindow::z_box(2, 2).unwrap();
        assert_eq!(w.len(), 25);
        assert_eq!(w.edge_count(), 2 * 5 * 4);
        assert_eq!(w.interior().len(), 9);
        assert_eq!(w.index_of_coords(&[0, 0]), Some(w.origin()));
        let o = w.origin();
        let mut nb = w.neighbors(o).to_vec();
        nb.sort();
        let mut expect: Vec<u32> = [[1, 0], [-1, 0], [0, 1], [0, -1]]
            .iter()
            .map(|c| w.index_of_coords(c).unwrap() as u32)
            .collect();
        expect.sort();
        assert_eq!(nb, expect);
        assert!(w.is_shell(w.index_of_coords(&[2, -1]).unwrap()));
        let (low, high) = w.faces().unwrap();
        assert_eq!(low.len(), 5);
        assert!(low.contains(&w.index_of_coords(&[-2, 1]).unwrap()));
        assert!(high[w.index_of_coords(&[2, 0]).unwrap()]);
        assert_eq!(high.iter().filter(|&&b| b).count(), 5);
    }

    #[test]
    fn ball_window_drops_stubs() {
        let m = GroupModel::free_abelian(2).unwrap();
        let b = Arc::new(build_ball(&m, &standard_generators(&m), 3).unwrap());
        let w = PercWindow::from_ball(b.clone());
        assert_eq!(w.len(), 25);
        assert_eq!(w.neighbors(0).len(), 4);
        assert_eq!(w.interior().len(), b.count_within(2));
        let shell_v = (0..w.len()).find(|&v| b.dist(v) == 3).unwrap();
        assert!(w.neighbors(shell_v).len() < 4);
    }
}
