//! Index controls `I_k ⊆ {1, …, m}` selecting which constraints a block
//! operator looks at in iteration `k`.
//!
//! Fixed blocks walk through the index set `b` indices at a time, wrapping
//! modulo `m`, so any `⌈m/b⌉` consecutive blocks cover everything. Augmented
//! blocks keep scanning in the same cyclic order until `b` violated
//! constraints have been collected, falling back to the full index set when
//! a whole sweep finds fewer than `b`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operators::Operator;
use crate::vector::Vector;

/// `(k mod m) + 1`.
pub fn cyclic_index(k: usize, m: usize) -> usize {
    assert!(m >= 1, "cyclic_index needs m >= 1");
    (k % m) + 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockMode {
    Fixed,
    Augmented,
}

/// Where activity of a scanned constraint is measured in augmented mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathMode {
    /// At the current iterate `x`.
    Pointwise,
    /// At `U_{i_{t−1}} ⋯ U_{i_1} x`, the partial composition along the block.
    Composition,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockControl {
    m: usize,
    block_size: usize,
    mode: BlockMode,
    /// 0-based position where the next scan starts.
    next: usize,
    last: Option<usize>,
    activity_tol: f64,
}

impl BlockControl {
    pub fn new(m: usize, block_size: usize, mode: BlockMode) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidConfig("control needs m >= 1".into()));
        }
        if block_size == 0 || block_size > m {
            return Err(Error::InvalidConfig(format!(
                "block size {block_size} outside [1, {m}]"
            )));
        }
        Ok(BlockControl {
            m,
            block_size,
            mode,
            next: 0,
            last: None,
            activity_tol: 0.0,
        })
    }

    pub fn fixed(m: usize, block_size: usize) -> Result<Self> {
        Self::new(m, block_size, BlockMode::Fixed)
    }

    pub fn augmented(m: usize, block_size: usize) -> Result<Self> {
        Self::new(m, block_size, BlockMode::Augmented)
    }

    /// A constraint counts as active when its proximity exceeds `tol`.
    pub fn with_activity_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(Error::InvalidConfig(format!("activity tolerance {tol}")));
        }
        self.activity_tol = tol;
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn mode(&self) -> BlockMode {
        self.mode
    }

    /// 1-based index the next scan starts from.
    pub fn cursor(&self) -> usize {
        self.next + 1
    }

    /// Last index of the most recent block (`l_k`), if any.
    pub fn last_index(&self) -> Option<usize> {
        self.last
    }

    /// The next `b` indices after `l_k`, wrapping modulo `m`. The first call
    /// returns `{1, …, b}`.
    pub fn next_fixed_block(&mut self) -> Result<Vec<usize>> {
        if self.mode != BlockMode::Fixed {
            return Err(Error::InvalidConfig(
                "next_fixed_block called on an augmented control".into(),
            ));
        }
        let block: Vec<usize> = (0..self.block_size)
            .map(|j| (self.next + j) % self.m + 1)
            .collect();
        self.advance_past(*block.last().expect("b >= 1"));
        Ok(block)
    }

    /// Grows a block in cyclic order from the cursor until it holds
    /// `b` active constraints; inactive indices met on the way stay in the
    /// block. Returns `{1, …, m}` (cursor untouched) when a full sweep finds
    /// fewer than `b` active constraints.
    ///
    /// `children[i − 1]` is the operator `Uᵢ` whose proximity decides
    /// activity of constraint `i`.
    pub fn next_augmented_block(
        &mut self,
        x: &Vector,
        children: &[Arc<Operator>],
        path: PathMode,
    ) -> Result<Vec<usize>> {
        if self.mode != BlockMode::Augmented {
            return Err(Error::InvalidConfig(
                "next_augmented_block called on a fixed control".into(),
            ));
        }
        if children.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: children.len(),
            });
        }
        x.check_dim(children[0].dim())?;

        let mut point = x.as_slice().to_vec();
        let mut block = Vec::with_capacity(self.block_size);
        let mut active = 0;
        for j in 0..self.m {
            let i = (self.next + j) % self.m + 1;
            let child = &children[i - 1];
            block.push(i);
            if child.proximity_raw(&point)? > self.activity_tol {
                active += 1;
            }
            if path == PathMode::Composition {
                child.apply_in_place(&mut point)?;
            }
            if active == self.block_size {
                self.advance_past(i);
                return Ok(block);
            }
        }
        Ok((1..=self.m).collect())
    }

    fn advance_past(&mut self, last: usize) {
        self.last = Some(last);
        self.next = last % self.m;
    }
}
