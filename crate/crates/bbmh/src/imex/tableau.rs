//! Additive (IMEX) Runge–Kutta tableaux: parsing, classification and order
//! conditions. Files ship next to the crate and are embedded; every load
//! re-validates classification and order so a corrupted table cannot run.

use serde::Serialize;

use crate::{Error, Result};

const TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TableauKind {
    /// Invertible implicit coefficient matrix A.
    TypeI,
    /// First stage fully explicit, trailing implicit block Â invertible.
    TypeII,
}

impl TableauKind {
    fn as_str(&self) -> &'static str {
        match self {
            TableauKind::TypeI => "type_I",
            TableauKind::TypeII => "type_II",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TableauClassification {
    pub kind: TableauKind,
    /// Last rows of both parts equal the respective weights.
    pub gsa: bool,
    /// Type II with zero first implicit column below row one and vanishing
    /// first implicit weight.
    pub ars: bool,
    /// Last explicit row equals the explicit weights (first-same-as-last).
    pub fsal_explicit: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ImexTableau {
    pub name: String,
    pub s: usize,
    pub a_expl: Vec<Vec<f64>>,
    pub b_expl: Vec<f64>,
    pub a_impl: Vec<Vec<f64>>,
    pub b_impl: Vec<f64>,
    pub declared_order: usize,
    pub kind_hint: TableauKind,
}

/// One order condition with its residual.
#[derive(Clone, Debug, Serialize)]
pub struct OrderCondition {
    pub order: usize,
    pub label: String,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderReport {
    pub conditions: Vec<OrderCondition>,
}

impl OrderReport {
    pub fn max_residual(&self, up_to: usize) -> f64 {
        self.conditions
            .iter()
            .filter(|c| c.order <= up_to)
            .map(|c| c.residual.abs())
            .fold(0.0, f64::max)
    }
}

fn parse_entry(tok: &str, line: usize) -> Result<f64> {
    let bad = |msg: String| Error::TableauParse { line, msg };
    if let Some((p, q)) = tok.split_once('/') {
        let num: f64 = p
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad rational numerator {p:?}")))?;
        let den: f64 = q
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad rational denominator {q:?}")))?;
        if den == 0.0 {
            return Err(bad(format!("zero denominator in {tok:?}")));
        }
        Ok(num / den)
    } else {
        tok.parse()
            .map_err(|_| bad(format!("bad numeric entry {tok:?}")))
    }
}

impl ImexTableau {
    /// Parse the on-disk format: a header line `name s order kind`, then s
    /// explicit rows, explicit weights, s implicit rows, implicit weights.
    /// Entries are decimals or p/q rationals; # starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter_map(|(i, raw)| {
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                None
            } else {
                Some((i + 1, body))
            }
        });
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::TableauParse {
                line: 0,
                msg: "empty tableau file".into(),
            })?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 4 {
            return Err(Error::TableauParse {
                line: hline,
                msg: format!("header needs `name s order kind`, got {header:?}"),
            });
        }
        let name = head[0].to_string();
        let s: usize = head[1].parse().map_err(|_| Error::TableauParse {
            line: hline,
            msg: format!("bad stage count {:?}", head[1]),
        })?;
        let declared_order: usize = head[2].parse().map_err(|_| Error::TableauParse {
            line: hline,
            msg: format!("bad order {:?}", head[2]),
        })?;
        let kind_hint = match head[3] {
            "type_I" | "I" => TableauKind::TypeI,
            "type_II" | "II" => TableauKind::TypeII,
            other => {
                return Err(Error::TableauParse {
                    line: hline,
                    msg: format!("unknown kind hint {other:?}"),
                })
            }
        };
        if s == 0 {
            return Err(Error::TableauParse {
                line: hline,
                msg: "stage count must be positive".into(),
            });
        }
        let mut read_row = |expect: usize| -> Result<Vec<f64>> {
            let (lno, body) = lines.next().ok_or_else(|| Error::TableauParse {
                line: hline,
                msg: "file ends before all rows are read".into(),
            })?;
            let row: Result<Vec<f64>> = body
                .split_whitespace()
                .map(|tok| parse_entry(tok, lno))
                .collect();
            let row = row?;
            if row.len() != expect {
                return Err(Error::TableauParse {
                    line: lno,
                    msg: format!("expected {expect} entries, got {}", row.len()),
                });
            }
            Ok(row)
        };
        let mut a_expl = Vec::with_capacity(s);
        for _ in 0..s {
            a_expl.push(read_row(s)?);
        }
        let b_expl = read_row(s)?;
        let mut a_impl = Vec::with_capacity(s);
        for _ in 0..s {
            a_impl.push(read_row(s)?);
        }
        let b_impl = read_row(s)?;
        if let Some((lno, _)) = lines.next() {
            return Err(Error::TableauParse {
                line: lno,
                msg: "trailing data after tableau".into(),
            });
        }
        let tab = ImexTableau {
            name,
            s,
            a_expl,
            b_expl,
            a_impl,
            b_impl,
            declared_order,
            kind_hint,
        };
        tab.check_shape()?;
        Ok(tab)
    }

    fn check_shape(&self) -> Result<()> {
        for (i, row) in self.a_expl.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                if j >= i && a != 0.0 {
                    return Err(Error::UnclassifiableTableau {
                        name: self.name.clone(),
                        msg: format!("explicit part not strictly lower triangular at ({i},{j})"),
                    });
                }
            }
        }
        for (i, row) in self.a_impl.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                if j > i && a != 0.0 {
                    return Err(Error::UnclassifiableTableau {
                        name: self.name.clone(),
                        msg: format!("implicit part not lower triangular at ({i},{j})"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Serialize back to the on-disk format (round-trips bitwise: shortest
    /// f64 representations).
    pub fn to_file_string(&self) -> String {
        let row = |r: &[f64]| {
            r.iter()
                .map(|v| format!("{v}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = format!(
            "{} {} {} {}\n",
            self.name,
            self.s,
            self.declared_order,
            self.kind_hint.as_str()
        );
        for r in &self.a_expl {
            out.push_str(&row(r));
            out.push('\n');
        }
        out.push_str(&row(&self.b_expl));
        out.push('\n');
        for r in &self.a_impl {
            out.push_str(&row(r));
            out.push('\n');
        }
        out.push_str(&row(&self.b_impl));
        out.push('\n');
        out
    }

    pub fn c_expl(&self) -> Vec<f64> {
        self.a_expl.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn c_impl(&self) -> Vec<f64> {
        self.a_impl.iter().map(|r| r.iter().sum()).collect()
    }

    /// Structural classification per the definitions in the tableau files'
    /// own documentation: kind, global stiff accuracy, the ARS property and
    /// explicit FSAL.
    pub fn classify(&self) -> Result<TableauClassification> {
        let s = self.s;
        let mag = self
            .a_impl
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let invertible_diag = |rows: &dyn Fn(usize) -> f64, count: usize| -> bool {
            // Lower-triangular blocks: invertibility is a product of
            // diagonal entries; compare against the matrix magnitude.
            (0..count).all(|i| rows(i).abs() > TOL * mag.max(1.0))
        };
        let type_i = invertible_diag(&|i| self.a_impl[i][i], s);
        let first_row_zero = self.a_impl[0].iter().all(|v| v.abs() <= TOL)
            && self.a_expl[0].iter().all(|v| v.abs() <= TOL);
        let type_ii =
            s >= 2 && first_row_zero && invertible_diag(&|i| self.a_impl[i + 1][i + 1], s - 1);
        let kind = if type_i {
            TableauKind::TypeI
        } else if type_ii {
            TableauKind::TypeII
        } else {
            return Err(Error::UnclassifiableTableau {
                name: self.name.clone(),
                msg: "implicit part neither invertible nor type II".into(),
            });
        };
        let close = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .all(|(x, y)| (x - y).abs() <= TOL * mag.max(1.0))
        };
        let gsa = close(&self.a_expl[s - 1], &self.b_expl) && close(&self.a_impl[s - 1], &self.b_impl);
        let ars = kind == TableauKind::TypeII
            && (1..s).all(|i| self.a_impl[i][0].abs() <= TOL)
            && self.b_impl[0].abs() <= TOL;
        let fsal_explicit = close(&self.a_expl[s - 1], &self.b_expl);
        Ok(TableauClassification {
            kind,
            gsa,
            ars,
            fsal_explicit,
        })
    }

    /// Residuals of all additive order conditions up to the requested order
    /// (≤ 3). With two abscissa vectors every coloring of every tree is
    /// checked separately.
    pub fn check_order_conditions(&self, up_to: usize) -> Result<OrderReport> {
        if up_to > 3 {
            return Err(Error::InvalidConfig(format!(
                "order conditions implemented up to 3, requested {up_to}"
            )));
        }
        let ce = self.c_expl();
        let ci = self.c_impl();
        let weights: [(&str, &Vec<f64>); 2] = [("b~", &self.b_expl), ("b", &self.b_impl)];
        let cs: [(&str, &Vec<f64>); 2] = [("c~", &ce), ("c", &ci)];
        let mats: [(&str, &Vec<Vec<f64>>); 2] = [("A~", &self.a_expl), ("A", &self.a_impl)];
        let mut conditions = Vec::new();
        for (bn, b) in &weights {
            let sum: f64 = b.iter().sum();
            conditions.push(OrderCondition {
                order: 1,
                label: format!("sum {bn} = 1"),
                residual: sum - 1.0,
            });
        }
        if up_to >= 2 {
            for (bn, b) in &weights {
                for (cn, c) in &cs {
                    let dot: f64 = b.iter().zip(c.iter()).map(|(x, y)| x * y).sum();
                    conditions.push(OrderCondition {
                        order: 2,
                        label: format!("{bn}·{cn} = 1/2"),
                        residual: dot - 0.5,
                    });
                }
            }
        }
        if up_to >= 3 {
            for (bn, b) in &weights {
                for (i1, (cn1, c1)) in cs.iter().enumerate() {
                    for (i2, (cn2, c2)) in cs.iter().enumerate() {
                        if i2 < i1 {
                            continue; // c1∘c2 symmetric
                        }
                        let dot: f64 = b
                            .iter()
                            .zip(c1.iter().zip(c2.iter()))
                            .map(|(x, (y, z))| x * y * z)
                            .sum();
                        conditions.push(OrderCondition {
                            order: 3,
                            label: format!("{bn}·({cn1}∘{cn2}) = 1/3"),
                            residual: dot - 1.0 / 3.0,
                        });
                    }
                }
                for (an, a) in &mats {
                    for (cn, c) in &cs {
                        let mut dot = 0.0;
                        for i in 0..self.s {
                            let ac: f64 =
                                a[i].iter().zip(c.iter()).map(|(x, y)| x * y).sum();
                            dot += b[i] * ac;
                        }
                        conditions.push(OrderCondition {
                            order: 3,
                            label: format!("{bn}·{an}·{cn} = 1/6"),
                            residual: dot - 1.0 / 6.0,
                        });
                    }
                }
            }
        }
        Ok(OrderReport { conditions })
    }

    /// Full load-time validation: classification must match the file's kind
    /// hint and the declared order's conditions must hold to 1e−12.
    pub fn validate(&self) -> Result<TableauClassification> {
        let cls = self.classify()?;
        if cls.kind != self.kind_hint {
            return Err(Error::UnclassifiableTableau {
                name: self.name.clone(),
                msg: format!(
                    "kind hint {} but classified {}",
                    self.kind_hint.as_str(),
                    cls.kind.as_str()
                ),
            });
        }
        let report = self.check_order_conditions(self.declared_order.min(3))?;
        let worst = report.max_residual(self.declared_order);
        if worst > TOL {
            return Err(Error::OrderConditionFailure {
                name: self.name.clone(),
                order: self.declared_order,
                msg: format!("worst residual {worst:.3e}"),
            });
        }
        Ok(cls)
    }

    /// Inverse of the implicit block that acts on solved stages: A⁻¹ for
    /// type I, Â⁻¹ (stages 2..s) for type II. Returns rows of weights
    /// indexed by stage. Used to assemble discrete-limit references.
    pub fn implicit_block_inverse(&self) -> Result<(usize, Vec<Vec<f64>>)> {
        let cls = self.classify()?;
        let (offset, m) = match cls.kind {
            TableauKind::TypeI => (0usize, self.s),
            TableauKind::TypeII => (1usize, self.s - 1),
        };
        // Forward substitution per unit column; the block is lower
        // triangular with nonzero diagonal by classification.
        let mut inv = vec![vec![0.0; m]; m];
        for col in 0..m {
            let mut x = vec![0.0; m];
            for i in 0..m {
                let mut rhs = if i == col { 1.0 } else { 0.0 };
                for j in 0..i {
                    rhs -= self.a_impl[offset + i][offset + j] * x[j];
                }
                x[i] = rhs / self.a_impl[offset + i][offset + i];
            }
            for i in 0..m {
                inv[i][col] = x[i];
            }
        }
        Ok((offset, inv))
    }
}

// Shipped tableaux, embedded at compile time.
const ARS443: &str = include_str!("../../data/tableaux/ars443.txt");
const AGSA342: &str = include_str!("../../data/tableaux/agsa342.txt");
const SPIMEX322: &str = include_str!("../../data/tableaux/spimex322.txt");
const BPR343: &str = include_str!("../../data/tableaux/bpr343.txt");

pub const BUILTIN_TABLEAUX: [&str; 4] = ["ars443", "agsa342", "spimex322", "bpr343"];

/// Load one of the shipped tableaux by name; validates on every load.
pub fn builtin(name: &str) -> Result<ImexTableau> {
    let text = match name {
        "ars443" => ARS443,
        "agsa342" => AGSA342,
        "spimex322" => SPIMEX322,
        "bpr343" => BPR343,
        other => return Err(Error::UnknownTableau(other.to_string())),
    };
    let tab = ImexTableau::parse(text)?;
    tab.validate()?;
    Ok(tab)
}

/// Resolve a name or a path: builtin names first, then the filesystem.
pub fn load(name_or_path: &str) -> Result<ImexTableau> {
    if BUILTIN_TABLEAUX.contains(&name_or_path) {
        return builtin(name_or_path);
    }
    let text = std::fs::read_to_string(name_or_path).map_err(|e| {
        if matches!(e.kind(), std::io::ErrorKind::NotFound) {
            Error::UnknownTableau(name_or_path.to_string())
        } else {
            Error::Io(e)
        }
    })?;
    let tab = ImexTableau::parse(&text)?;
    tab.validate()?;
    Ok(tab)
}
