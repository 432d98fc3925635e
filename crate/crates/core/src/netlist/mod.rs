//! Line-oriented netlist front end.
//!
//! One branch per line: `<KIND> <id> <tail> <head> <coeff...>` with
//! `KIND` one of `M C L R V I`. `#` starts a comment. Memristors and
//! resistors take polynomial coefficients (low degree first): the
//! memristance `M(q)` and the incremental resistance `R(i)` respectively.
//! Capacitors, inductors and sources take exactly one value.

mod poly;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use poly::{deriv_poly, eval_poly, Polynomial};

use crate::{Error, Result, Scalar};

/// Device class of a branch. The declaration order is the column order of
/// the class blocks of the loop and cutset matrices: m, c, l, r, u, j.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceKind {
    Memristor,
    Capacitor,
    Inductor,
    Resistor,
    VoltageSource,
    CurrentSource,
}

impl DeviceKind {
    pub const ALL: [DeviceKind; 6] = [
        DeviceKind::Memristor,
        DeviceKind::Capacitor,
        DeviceKind::Inductor,
        DeviceKind::Resistor,
        DeviceKind::VoltageSource,
        DeviceKind::CurrentSource,
    ];

    pub fn letter(self) -> char {
        match self {
            DeviceKind::Memristor => 'M',
            DeviceKind::Capacitor => 'C',
            DeviceKind::Inductor => 'L',
            DeviceKind::Resistor => 'R',
            DeviceKind::VoltageSource => 'V',
            DeviceKind::CurrentSource => 'I',
        }
    }

    pub fn from_letter(s: &str) -> Option<Self> {
        match s {
            "M" | "m" => Some(DeviceKind::Memristor),
            "C" | "c" => Some(DeviceKind::Capacitor),
            "L" | "l" => Some(DeviceKind::Inductor),
            "R" | "r" => Some(DeviceKind::Resistor),
            "V" | "v" => Some(DeviceKind::VoltageSource),
            "I" | "i" => Some(DeviceKind::CurrentSource),
            _ => None,
        }
    }

    /// Position of the class block (m=0 ... j=5).
    pub fn block(self) -> usize {
        self as usize
    }

    fn polynomial_allowed(self) -> bool {
        matches!(self, DeviceKind::Memristor | DeviceKind::Resistor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Branch<T> {
    pub id: String,
    pub kind: DeviceKind,
    /// Index into [`Circuit::nodes`].
    pub tail: usize,
    pub head: usize,
    pub characteristic: Polynomial<T>,
}

/// Connected directed multigraph with device-classified branches.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Circuit<T> {
    nodes: Vec<String>,
    branches: Vec<Branch<T>>,
    class_index: [Vec<usize>; 6],
}

impl<T: Scalar> Circuit<T> {
    /// Builds and validates a circuit from already-typed branches. Node ids
    /// are taken in order of first appearance.
    pub fn from_branches(
        branches: impl IntoIterator<Item = (String, DeviceKind, String, String, Polynomial<T>)>,
    ) -> Result<Self> {
        let mut builder = Builder::default();
        for (line, (id, kind, tail, head, ch)) in branches.into_iter().enumerate() {
            builder.push(line + 1, id, kind, &tail, &head, ch)?;
        }
        builder.finish()
    }
}

impl<T> Circuit<T> {
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn branches(&self) -> &[Branch<T>] {
        &self.branches
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    /// Branch positions of one class, in netlist order.
    pub fn class(&self, kind: DeviceKind) -> &[usize] {
        &self.class_index[kind.block()]
    }

    pub fn count(&self, kind: DeviceKind) -> usize {
        self.class(kind).len()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.branches.iter().position(|b| b.id == id)
    }

    /// The single memristor, if exactly one exists.
    pub fn memristor(&self) -> Option<&Branch<T>> {
        match self.class(DeviceKind::Memristor) {
            [k] => Some(&self.branches[*k]),
            _ => None,
        }
    }

    /// Serializes back to netlist text; parsing the result yields an equal circuit.
    pub fn to_netlist(&self) -> String
    where
        T: std::fmt::Display,
    {
        let mut out = String::new();
        for b in &self.branches {
            let _ = write!(
                out,
                "{} {} {} {}",
                b.kind.letter(),
                b.id,
                self.nodes[b.tail],
                self.nodes[b.head]
            );
            for c in b.characteristic.coeffs() {
                let _ = write!(out, " {c}");
            }
            out.push('\n');
        }
        out
    }
}

impl<T: Scalar> Circuit<T> {
    /// Replaces the characteristic of a branch, e.g. to sweep a parameter.
    pub fn set_characteristic(
        &mut self,
        position: usize,
        characteristic: Polynomial<T>,
    ) -> Result<()> {
        let kind = self.branches[position].kind;
        if !kind.polynomial_allowed() && !characteristic.is_constant() {
            return Err(Error::Evaluation(format!(
                "branch `{}` only accepts a constant value",
                self.branches[position].id
            )));
        }
        self.branches[position].characteristic = characteristic;
        Ok(())
    }
}

impl<T: Scalar> FromStr for Circuit<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_netlist(s)
    }
}

pub fn parse_netlist<T: Scalar>(text: &str) -> Result<Circuit<T>> {
    let mut builder = Builder::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        let Some(kind_tok) = tokens.next() else {
            continue;
        };
        let kind = DeviceKind::from_letter(kind_tok).ok_or_else(|| Error::UnknownKind {
            line,
            kind: kind_tok.to_string(),
        })?;
        let mut field = |name: &str| {
            tokens
                .next()
                .map(str::to_string)
                .ok_or_else(|| Error::Syntax {
                    line,
                    message: format!("missing {name}"),
                })
        };
        let id = field("branch id")?;
        let tail = field("tail node")?;
        let head = field("head node")?;
        let coeffs = tokens
            .map(|tok| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .and_then(T::from_f64)
                    .ok_or_else(|| Error::Syntax {
                        line,
                        message: format!("invalid coefficient `{tok}`"),
                    })
            })
            .collect::<Result<Vec<T>>>()?;
        let Some(characteristic) = Polynomial::new(coeffs) else {
            return Err(Error::MissingCharacteristic { line, id });
        };
        if !kind.polynomial_allowed() && characteristic.degree() > 0 {
            return Err(Error::Syntax {
                line,
                message: format!(
                    "{} branch `{id}` takes exactly one value, got {}",
                    kind.letter(),
                    characteristic.coeffs().len()
                ),
            });
        }
        builder.push(line, id, kind, &tail, &head, characteristic)?;
    }
    builder.finish()
}

struct Builder<T> {
    nodes: Vec<String>,
    node_lookup: HashMap<String, usize>,
    branches: Vec<Branch<T>>,
    ids: HashMap<String, usize>,
}

impl<T> Default for Builder<T> {
    fn default() -> Self {
        Self {
            nodes: Vec::new(),
            node_lookup: HashMap::new(),
            branches: Vec::new(),
            ids: HashMap::new(),
        }
    }
}

impl<T: Scalar> Builder<T> {
    fn node(&mut self, name: &str) -> usize {
        if let Some(&k) = self.node_lookup.get(name) {
            return k;
        }
        self.nodes.push(name.to_string());
        self.node_lookup
            .insert(name.to_string(), self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    fn push(
        &mut self,
        line: usize,
        id: String,
        kind: DeviceKind,
        tail: &str,
        head: &str,
        characteristic: Polynomial<T>,
    ) -> Result<()> {
        if tail == head {
            return Err(Error::SelfLoop {
                line,
                id,
                node: tail.to_string(),
            });
        }
        if self.ids.contains_key(&id) {
            return Err(Error::DuplicateId { line, id });
        }
        let tail = self.node(tail);
        let head = self.node(head);
        self.ids.insert(id.clone(), self.branches.len());
        self.branches.push(Branch {
            id,
            kind,
            tail,
            head,
            characteristic,
        });
        Ok(())
    }

    fn finish(self) -> Result<Circuit<T>> {
        if self.branches.is_empty() {
            return Err(Error::EmptyCircuit);
        }
        let edges: Vec<(usize, usize)> = self.branches.iter().map(|b| (b.tail, b.head)).collect();
        let components = crate::graph::component_count(self.nodes.len(), &edges);
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        let mut class_index: [Vec<usize>; 6] = Default::default();
        for (k, b) in self.branches.iter().enumerate() {
            class_index[b.kind.block()].push(k);
        }
        Ok(Circuit {
            nodes: self.nodes,
            branches: self.branches,
            class_index,
        })
    }
}
