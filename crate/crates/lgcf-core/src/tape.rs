//! Reverse-mode differentiation on a Wengert list of scalar primitives.
//!
//! Local partial derivatives are evaluated during the forward pass, so
//! every node is either a leaf or a unary/binary record; the backward
//! sweep is a single reverse pass accumulating adjoints.
//!
//! Kinked primitives carry the subgradient conventions the training loss
//! needs: `relu'(0) = 0`, `acosh` is differentiated at its clamped
//! argument, and clamps propagate zero outside their active range.

use alloc::vec::Vec;

/// Handle to a tape node; carries the forward value so expression code
/// never re-reads the tape.
#[derive(Debug, Clone, Copy)]
pub struct Var {
    index: usize,
    pub value: f64,
}

enum Record {
    Leaf,
    Unary { parent: usize, partial: f64 },
    Binary { parents: [usize; 2], partials: [f64; 2] },
}

/// Gradient tape. Leaves are registered with [`Tape::leaf`]; everything
/// else is built from the primitive combinators below.
pub struct Tape {
    records: Vec<Record>,
}

impl Tape {
    pub fn new() -> Self {
        Self {
            records: Vec::new(),
        }
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            records: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn push(&mut self, record: Record, value: f64) -> Var {
        let index = self.records.len();
        self.records.push(record);
        Var { index, value }
    }

    /// A differentiable input; its adjoint appears in [`Tape::gradient`].
    pub fn leaf(&mut self, value: f64) -> Var {
        self.push(Record::Leaf, value)
    }

    /// A value treated as constant (zero derivative).
    pub fn constant(&mut self, value: f64) -> Var {
        self.push(Record::Leaf, value)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.push(
            Record::Binary {
                parents: [a.index, b.index],
                partials: [1.0, 1.0],
            },
            a.value + b.value,
        )
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.push(
            Record::Binary {
                parents: [a.index, b.index],
                partials: [1.0, -1.0],
            },
            a.value - b.value,
        )
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.push(
            Record::Binary {
                parents: [a.index, b.index],
                partials: [b.value, a.value],
            },
            a.value * b.value,
        )
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        let value = a.value / b.value;
        self.push(
            Record::Binary {
                parents: [a.index, b.index],
                partials: [1.0 / b.value, -value / b.value],
            },
            value,
        )
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.push(
            Record::Unary {
                parent: a.index,
                partial: 2.0 * a.value,
            },
            a.value * a.value,
        )
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.push(
            Record::Unary {
                parent: a.index,
                partial: c,
            },
            c * a.value,
        )
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        let value = libm::sqrt(a.value);
        self.push(
            Record::Unary {
                parent: a.index,
                partial: 0.5 / value,
            },
            value,
        )
    }

    /// `max(a, min)`; derivative 1 inside the active range, 0 when the
    /// clamp binds.
    pub fn clamp_min(&mut self, a: Var, min: f64) -> Var {
        let clamped = a.value < min;
        self.push(
            Record::Unary {
                parent: a.index,
                partial: if clamped { 0.0 } else { 1.0 },
            },
            if clamped { min } else { a.value },
        )
    }

    /// `min(a, max)` with the matching zero-outside derivative.
    pub fn clamp_max(&mut self, a: Var, max: f64) -> Var {
        let clamped = a.value > max;
        self.push(
            Record::Unary {
                parent: a.index,
                partial: if clamped { 0.0 } else { 1.0 },
            },
            if clamped { max } else { a.value },
        )
    }

    /// `arcosh` with its argument clamped to `1 + 1e-12`, where the
    /// derivative `1/sqrt(t^2 - 1)` stays finite.
    pub fn acosh_clamped(&mut self, a: Var) -> Var {
        let t = if a.value < 1.0 + 1e-12 { 1.0 + 1e-12 } else { a.value };
        self.push(
            Record::Unary {
                parent: a.index,
                partial: 1.0 / libm::sqrt(t * t - 1.0),
            },
            libm::acosh(t),
        )
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let active = a.value > 0.0;
        self.push(
            Record::Unary {
                parent: a.index,
                partial: if active { 1.0 } else { 0.0 },
            },
            if active { a.value } else { 0.0 },
        )
    }

    pub fn sinh(&mut self, a: Var) -> Var {
        self.push(
            Record::Unary {
                parent: a.index,
                partial: libm::cosh(a.value),
            },
            libm::sinh(a.value),
        )
    }

    pub fn cosh(&mut self, a: Var) -> Var {
        self.push(
            Record::Unary {
                parent: a.index,
                partial: libm::sinh(a.value),
            },
            libm::cosh(a.value),
        )
    }

    /// Sum of a slice of vars, chained as binary adds.
    pub fn sum(&mut self, vars: &[Var]) -> Var {
        let mut iter = vars.iter();
        let mut acc = *iter.next().expect("sum of empty slice");
        for v in iter {
            acc = self.add(acc, *v);
        }
        acc
    }

    /// Adjoints of every node with respect to `output`, in node order.
    pub fn gradient(&self, output: Var) -> Vec<f64> {
        let mut adjoint = alloc::vec![0.0; self.records.len()];
        adjoint[output.index] = 1.0;
        for i in (0..=output.index).rev() {
            let seed = adjoint[i];
            if seed == 0.0 {
                continue;
            }
            match &self.records[i] {
                Record::Leaf => {}
                Record::Unary { parent, partial } => {
                    adjoint[*parent] += seed * partial;
                }
                Record::Binary { parents, partials } => {
                    adjoint[parents[0]] += seed * partials[0];
                    adjoint[parents[1]] += seed * partials[1];
                }
            }
        }
        adjoint
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}
