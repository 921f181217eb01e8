//! CVRP-TW instances: customers, depot, fleet capacity, Euclidean distances and
//! ingestion of the Solomon text layout.
//!
//! Node ids are shared by every module: `0` is the depot and customers are
//! `1..=n` in file order.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::ParseError;

/// Node id of the depot.
pub const DEPOT: usize = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Customer {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub demand: f64,
    pub tw_open: f64,
    pub tw_close: f64,
    pub service_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Depot {
    pub x: f64,
    pub y: f64,
    /// Planning horizon as printed in the file. Informational only.
    pub ready: f64,
    pub due: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub depot: Depot,
    pub customers: Vec<Customer>,
    pub vehicle_capacity: f64,
    /// Fleet size printed in the VEHICLE section. Never enforced.
    pub vehicle_count: usize,
    /// Distance per time unit.
    pub speed: f64,
}

impl Instance {
    /// Checks the structural invariants; returns a description of the first
    /// violation.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.vehicle_capacity > 0.0) {
            return Err(format!(
                "vehicle capacity must be positive, got {}",
                self.vehicle_capacity
            ));
        }
        if !(self.speed > 0.0) {
            return Err(format!("speed must be positive, got {}", self.speed));
        }
        for (k, c) in self.customers.iter().enumerate() {
            if c.id != k + 1 {
                return Err(format!(
                    "customer ids must be 1..=n in order, found {} at position {}",
                    c.id,
                    k + 1
                ));
            }
            if !(c.tw_open < c.tw_close) {
                return Err(format!(
                    "customer {}: window [{}, {}] is empty",
                    c.id, c.tw_open, c.tw_close
                ));
            }
            if c.demand < 0.0 || c.service_time < 0.0 {
                return Err(format!(
                    "customer {}: negative demand or service time",
                    c.id
                ));
            }
        }
        Ok(())
    }

    pub fn num_customers(&self) -> usize {
        self.customers.len()
    }

    /// Number of nodes including the depot.
    pub fn num_nodes(&self) -> usize {
        self.customers.len() + 1
    }

    pub fn customer(&self, id: usize) -> &Customer {
        &self.customers[id - 1]
    }

    pub fn coords(&self, node: usize) -> (f64, f64) {
        if node == DEPOT {
            (self.depot.x, self.depot.y)
        } else {
            let c = self.customer(node);
            (c.x, c.y)
        }
    }

    pub fn demand(&self, node: usize) -> f64 {
        if node == DEPOT {
            0.0
        } else {
            self.customer(node).demand
        }
    }

    pub fn service_time(&self, node: usize) -> f64 {
        if node == DEPOT {
            0.0
        } else {
            self.customer(node).service_time
        }
    }

    /// Keeps only the first `n` customers, the usual way the 25- and
    /// 50-customer Solomon sets are derived from the 100-customer files.
    pub fn truncated(&self, n: usize) -> Instance {
        let mut out = self.clone();
        out.customers.truncate(n);
        out
    }

    /// Writes the instance back in Solomon layout. `parse_solomon` of the
    /// result reproduces `self` exactly.
    pub fn to_solomon(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.name);
        let _ = writeln!(s);
        let _ = writeln!(s, "VEHICLE");
        let _ = writeln!(s, "NUMBER     CAPACITY");
        let _ = writeln!(
            s,
            "  {}         {}",
            self.vehicle_count, self.vehicle_capacity
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "CUSTOMER");
        let _ = writeln!(
            s,
            "CUST NO.   XCOORD.   YCOORD.    DEMAND   READY TIME   DUE DATE   SERVICE TIME"
        );
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "    0 {} {} 0 {} {} 0",
            self.depot.x, self.depot.y, self.depot.ready, self.depot.due
        );
        for c in &self.customers {
            let _ = writeln!(
                s,
                "    {} {} {} {} {} {} {}",
                c.id, c.x, c.y, c.demand, c.tw_open, c.tw_close, c.service_time
            );
        }
        s
    }
}

/// Parses the Solomon layout: a name line, a `VEHICLE` section with
/// `NUMBER`/`CAPACITY`, then a `CUSTOMER` table whose row 0 is the depot.
/// Speed is fixed to 1 so that distance and time share units.
pub fn parse_solomon(text: &str) -> Result<Instance, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (_, name) = lines
        .next()
        .ok_or_else(|| ParseError::new(1, "empty input"))?;
    let name = name.to_string();

    let (ln, tag) = lines
        .next()
        .ok_or_else(|| ParseError::new(2, "missing VEHICLE section"))?;
    if !tag.eq_ignore_ascii_case("VEHICLE") {
        return Err(ParseError::new(
            ln,
            format!("expected VEHICLE, found `{tag}`"),
        ));
    }
    let (ln, header) = lines
        .next()
        .ok_or_else(|| ParseError::new(ln + 1, "missing NUMBER/CAPACITY header"))?;
    let upper = header.to_ascii_uppercase();
    if !(upper.contains("NUMBER") && upper.contains("CAPACITY")) {
        return Err(ParseError::new(
            ln,
            format!("expected NUMBER CAPACITY header, found `{header}`"),
        ));
    }
    let (ln, fleet) = lines
        .next()
        .ok_or_else(|| ParseError::new(ln + 1, "missing vehicle number and capacity"))?;
    let fleet = numbers(ln, fleet)?;
    if fleet.len() != 2 {
        return Err(ParseError::new(
            ln,
            format!("expected 2 fields, found {}", fleet.len()),
        ));
    }
    if fleet[0] < 0.0 || fleet[0].fract() != 0.0 {
        return Err(ParseError::new(
            ln,
            format!("vehicle number `{}` is not a count", fleet[0]),
        ));
    }
    let vehicle_count = fleet[0] as usize;
    let vehicle_capacity = fleet[1];
    if !(vehicle_capacity > 0.0) {
        return Err(ParseError::new(ln, "vehicle capacity must be positive"));
    }

    let (ln, tag) = lines
        .next()
        .ok_or_else(|| ParseError::new(ln + 1, "missing CUSTOMER section"))?;
    if !tag.eq_ignore_ascii_case("CUSTOMER") {
        return Err(ParseError::new(
            ln,
            format!("expected CUSTOMER, found `{tag}`"),
        ));
    }
    let (ln, header) = lines
        .next()
        .ok_or_else(|| ParseError::new(ln + 1, "missing customer table header"))?;
    if !header.to_ascii_uppercase().starts_with("CUST") {
        return Err(ParseError::new(
            ln,
            format!("expected customer table header, found `{header}`"),
        ));
    }

    let mut depot = None;
    let mut customers: Vec<Customer> = Vec::new();
    for (ln, row) in lines {
        let f = numbers(ln, row)?;
        if f.len() != 7 {
            return Err(ParseError::new(
                ln,
                format!("expected 7 fields, found {}", f.len()),
            ));
        }
        if f[0] < 0.0 || f[0].fract() != 0.0 {
            return Err(ParseError::new(
                ln,
                format!("customer number `{}` is not an id", f[0]),
            ));
        }
        let id = f[0] as usize;
        if depot.is_none() {
            if id != 0 {
                return Err(ParseError::new(
                    ln,
                    format!("first row must be the depot (id 0), found {id}"),
                ));
            }
            if f[3] != 0.0 {
                return Err(ParseError::new(ln, "depot has nonzero demand"));
            }
            if f[6] != 0.0 {
                return Err(ParseError::new(ln, "depot has nonzero service time"));
            }
            depot = Some(Depot {
                x: f[1],
                y: f[2],
                ready: f[4],
                due: f[5],
            });
            continue;
        }
        if id == 0 || customers.iter().any(|c| c.id == id) {
            return Err(ParseError::new(ln, format!("duplicate customer id {id}")));
        }
        if id != customers.len() + 1 {
            return Err(ParseError::new(
                ln,
                format!(
                    "customer ids must be contiguous, expected {} found {id}",
                    customers.len() + 1
                ),
            ));
        }
        let c = Customer {
            id,
            x: f[1],
            y: f[2],
            demand: f[3],
            tw_open: f[4],
            tw_close: f[5],
            service_time: f[6],
        };
        if c.demand < 0.0 || c.service_time < 0.0 {
            return Err(ParseError::new(ln, "negative demand or service time"));
        }
        if !(c.tw_open < c.tw_close) {
            return Err(ParseError::new(
                ln,
                format!("empty time window [{}, {}]", c.tw_open, c.tw_close),
            ));
        }
        customers.push(c);
    }
    let depot = depot.ok_or_else(|| ParseError::new(text.lines().count(), "missing depot row"))?;

    Ok(Instance {
        name,
        depot,
        customers,
        vehicle_capacity,
        vehicle_count,
        speed: 1.0,
    })
}

fn numbers(line: usize, row: &str) -> Result<Vec<f64>, ParseError> {
    row.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ParseError::new(line, format!("non-numeric field `{tok}`")))
        })
        .collect()
}

/// Symmetric Euclidean distances between all nodes, depot included.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(inst: &Instance) -> Self {
        let n = inst.num_nodes();
        let pts: Vec<(f64, f64)> = (0..n).map(|i| inst.coords(i)).collect();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = pts[i].0 - pts[j].0;
                let dy = pts[i].1 - pts[j].1;
                let v = (dx * dx + dy * dy).sqrt();
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Self { n, d }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.n..(i + 1) * self.n]
    }
}
