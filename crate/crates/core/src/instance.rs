//! Problem data: customers, demands, distance and travel-time matrices,
//! time windows and vehicle capacity.
//!
//! Node 0 is the depot. Customers are numbered `1..=n`, and every per-node
//! vector is indexed by node id (slot 0 belongs to the depot).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while reading or validating an instance.
#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("malformed instance document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("instance must have at least one customer")]
    NoCustomers,
    #[error("{name} matrix must be {side}x{side}")]
    NotSquare { name: &'static str, side: usize },
    #[error("{name} matrix has a non-zero diagonal entry at node {node}")]
    NonZeroDiagonal { name: &'static str, node: usize },
    #[error("negative entry in {0}")]
    NegativeEntry(&'static str),
    #[error("expected {expected} {name}, found {found}")]
    LengthMismatch {
        name: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("vehicle capacity must be positive")]
    ZeroCapacity,
    #[error("customer {customer} has zero demand")]
    ZeroDemand { customer: usize },
    #[error("demand exceeds capacity: customer {customer} requests {demand} > {c_max}")]
    DemandExceedsCapacity {
        customer: usize,
        demand: u64,
        c_max: u64,
    },
    #[error("customer {customer} has an inverted time window [{open}, {close}]")]
    InvertedWindow {
        customer: usize,
        open: u64,
        close: u64,
    },
}

/// Delivery window `[open, close]` of one customer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub open: u64,
    pub close: u64,
}

/// A validated CVRPTW instance. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    n: usize,
    c_max: u64,
    distance: Vec<Vec<u64>>,
    time: Vec<Vec<u64>>,
    /// Indexed by node id; `demands[0] == 0`.
    demands: Vec<u64>,
    /// Indexed by node id; slot 0 spans the whole horizon.
    windows: Vec<TimeWindow>,
    names: Option<Vec<String>>,
}

/// On-disk JSON layout. Field order is the serialization order.
#[derive(Debug, Serialize, Deserialize)]
struct InstanceDoc {
    n: i64,
    c_max: i64,
    distance: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    time: Option<Vec<Vec<i64>>>,
    demands: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    windows: Option<Vec<[i64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    names: Option<Vec<String>>,
}

/// Smallest `w` with `value < 2^w`, i.e. `ceil(log2(value + 1))`.
pub fn bits_for(value: u64) -> usize {
    (u64::BITS - value.leading_zeros()) as usize
}

/// Closing time given to customers when the document carries no windows:
/// the largest value of a register wide enough for any route's arrival time
/// (`n * max T`), so the window can never bind.
pub fn open_horizon(n: usize, time: &[Vec<u64>]) -> u64 {
    let t_max = time.iter().flatten().copied().max().unwrap_or(0);
    let longest = (n as u64).saturating_mul(t_max);
    let width = bits_for(longest).max(1);
    (1u64 << width) - 1
}

fn to_u64(v: i64, name: &'static str) -> Result<u64, InstanceError> {
    u64::try_from(v).map_err(|_| InstanceError::NegativeEntry(name))
}

fn to_matrix(
    rows: &[Vec<i64>],
    side: usize,
    name: &'static str,
) -> Result<Vec<Vec<u64>>, InstanceError> {
    if rows.len() != side || rows.iter().any(|r| r.len() != side) {
        return Err(InstanceError::NotSquare { name, side });
    }
    let m = rows
        .iter()
        .map(|r| r.iter().map(|&v| to_u64(v, name)).collect())
        .collect::<Result<Vec<Vec<u64>>, _>>()?;
    if let Some(node) = (0..side).find(|&i| m[i][i] != 0) {
        return Err(InstanceError::NonZeroDiagonal { name, node });
    }
    Ok(m)
}

impl Instance {
    /// Builds and validates an instance. `demands` and `windows` are given
    /// for customers `1..=n` only; missing `time` defaults to `distance`,
    /// missing windows default to `(0, open_horizon)`.
    pub fn new(
        c_max: u64,
        distance: Vec<Vec<u64>>,
        time: Option<Vec<Vec<u64>>>,
        demands: Vec<u64>,
        windows: Option<Vec<TimeWindow>>,
    ) -> Result<Self, InstanceError> {
        let to_i64 = |m: &Vec<Vec<u64>>| -> Vec<Vec<i64>> {
            m.iter()
                .map(|r| r.iter().map(|&v| v as i64).collect())
                .collect()
        };
        let doc = InstanceDoc {
            n: demands.len() as i64,
            c_max: c_max as i64,
            distance: to_i64(&distance),
            time: time.as_ref().map(to_i64),
            demands: demands.iter().map(|&q| q as i64).collect(),
            windows: windows.map(|ws| ws.iter().map(|w| [w.open as i64, w.close as i64]).collect()),
            names: None,
        };
        Self::from_doc(doc)
    }

    fn from_doc(doc: InstanceDoc) -> Result<Self, InstanceError> {
        if doc.n <= 0 {
            return Err(InstanceError::NoCustomers);
        }
        let n = doc.n as usize;
        let c_max = to_u64(doc.c_max, "c_max")?;
        if c_max == 0 {
            return Err(InstanceError::ZeroCapacity);
        }
        let distance = to_matrix(&doc.distance, n + 1, "distance")?;
        let time = match &doc.time {
            Some(t) => to_matrix(t, n + 1, "time")?,
            None => distance.clone(),
        };
        if doc.demands.len() != n {
            return Err(InstanceError::LengthMismatch {
                name: "demands",
                expected: n,
                found: doc.demands.len(),
            });
        }
        let mut demands = vec![0];
        for (i, &q) in doc.demands.iter().enumerate() {
            let q = to_u64(q, "demands")?;
            let customer = i + 1;
            if q == 0 {
                return Err(InstanceError::ZeroDemand { customer });
            }
            if q > c_max {
                return Err(InstanceError::DemandExceedsCapacity {
                    customer,
                    demand: q,
                    c_max,
                });
            }
            demands.push(q);
        }
        let horizon = open_horizon(n, &time);
        let mut windows = vec![TimeWindow {
            open: 0,
            close: horizon,
        }];
        match &doc.windows {
            Some(ws) => {
                if ws.len() != n {
                    return Err(InstanceError::LengthMismatch {
                        name: "windows",
                        expected: n,
                        found: ws.len(),
                    });
                }
                for (i, &[a, b]) in ws.iter().enumerate() {
                    let (open, close) = (to_u64(a, "windows")?, to_u64(b, "windows")?);
                    if open > close {
                        return Err(InstanceError::InvertedWindow {
                            customer: i + 1,
                            open,
                            close,
                        });
                    }
                    windows.push(TimeWindow { open, close });
                }
                windows[0].close = windows.iter().map(|w| w.close).max().unwrap_or(horizon);
            }
            None => windows.extend(std::iter::repeat_n(windows[0], n)),
        }
        if let Some(names) = &doc.names {
            if names.len() != n + 1 {
                return Err(InstanceError::LengthMismatch {
                    name: "names",
                    expected: n + 1,
                    found: names.len(),
                });
            }
        }
        Ok(Self {
            n,
            c_max,
            distance,
            time,
            demands,
            windows,
            names: doc.names,
        })
    }

    /// Parses a JSON instance document.
    pub fn parse(text: &str) -> Result<Self, InstanceError> {
        Self::from_doc(serde_json::from_str(text)?)
    }

    /// Serializes to the JSON document format. Windows and the time matrix
    /// are always written out, so defaults survive a round trip.
    pub fn to_json(&self) -> String {
        let to_i64 = |m: &Vec<Vec<u64>>| -> Vec<Vec<i64>> {
            m.iter()
                .map(|r| r.iter().map(|&v| v as i64).collect())
                .collect()
        };
        let doc = InstanceDoc {
            n: self.n as i64,
            c_max: self.c_max as i64,
            distance: to_i64(&self.distance),
            time: Some(to_i64(&self.time)),
            demands: self.demands[1..].iter().map(|&q| q as i64).collect(),
            windows: Some(
                self.windows[1..]
                    .iter()
                    .map(|w| [w.open as i64, w.close as i64])
                    .collect(),
            ),
            names: self.names.clone(),
        };
        serde_json::to_string(&doc).expect("instance documents always serialize")
    }

    /// Six-customer CVRP example with `C^max = 5` and no time windows.
    /// The distance matrix is not symmetric: `D[2][6] = 37`, `D[6][2] = 32`.
    pub fn six_customer_example() -> Self {
        let distance = vec![
            vec![0, 23, 30, 23, 14, 20, 26],
            vec![23, 0, 17, 27, 27, 38, 36],
            vec![30, 17, 0, 21, 40, 46, 37],
            vec![23, 27, 21, 0, 35, 40, 12],
            vec![14, 27, 40, 35, 0, 16, 31],
            vec![20, 38, 46, 40, 16, 0, 33],
            vec![26, 36, 32, 12, 31, 33, 0],
        ];
        Self::new(5, distance, None, vec![2, 3, 1, 3, 2, 3], None)
            .expect("built-in example is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c_max(&self) -> u64 {
        self.c_max
    }

    pub fn distance(&self, from: usize, to: usize) -> u64 {
        self.distance[from][to]
    }

    pub fn travel_time(&self, from: usize, to: usize) -> u64 {
        self.time[from][to]
    }

    pub fn distance_matrix(&self) -> &[Vec<u64>] {
        &self.distance
    }

    pub fn time_matrix(&self) -> &[Vec<u64>] {
        &self.time
    }

    /// Demand of node `i` (0 for the depot).
    pub fn demand(&self, i: usize) -> u64 {
        self.demands[i]
    }

    /// Demands indexed by node id.
    pub fn demands(&self) -> &[u64] {
        &self.demands
    }

    pub fn window(&self, i: usize) -> TimeWindow {
        self.windows[i]
    }

    pub fn windows(&self) -> &[TimeWindow] {
        &self.windows
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Largest closing time over customers.
    pub fn latest_close(&self) -> u64 {
        self.windows[1..].iter().map(|w| w.close).max().unwrap_or(0)
    }

    pub fn max_distance(&self) -> u64 {
        self.distance.iter().flatten().copied().max().unwrap_or(0)
    }

    pub fn max_travel_time(&self) -> u64 {
        self.time.iter().flatten().copied().max().unwrap_or(0)
    }
}

/// Routes of a decoded solution; each route implicitly starts and ends at
/// the depot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteSet {
    pub routes: Vec<Vec<usize>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("tour has {found} positions, expected {expected}")]
    TourLength { expected: usize, found: usize },
    #[error("split vector has {found} entries, expected {expected}")]
    SplitLength { expected: usize, found: usize },
    #[error("last split bit must be set")]
    OpenLastRoute,
}

impl RouteSet {
    /// Cuts `tour` after every position whose split bit is set.
    pub fn decode(n: usize, tour: &[usize], splits: &[bool]) -> Result<Self, DecodeError> {
        if tour.len() != n {
            return Err(DecodeError::TourLength {
                expected: n,
                found: tour.len(),
            });
        }
        if splits.len() != n {
            return Err(DecodeError::SplitLength {
                expected: n,
                found: splits.len(),
            });
        }
        if !splits.last().copied().unwrap_or(false) {
            return Err(DecodeError::OpenLastRoute);
        }
        let mut routes = Vec::new();
        let mut current = Vec::new();
        for (&c, &cut) in tour.iter().zip(splits) {
            current.push(c);
            if cut {
                routes.push(std::mem::take(&mut current));
            }
        }
        Ok(Self { routes })
    }

    /// Concatenation of all routes.
    pub fn flatten(&self) -> Vec<usize> {
        self.routes.iter().flatten().copied().collect()
    }

    /// Total depot-to-depot distance.
    pub fn cost(&self, inst: &Instance) -> u64 {
        self.routes
            .iter()
            .filter(|r| !r.is_empty())
            .map(|r| {
                inst.distance(0, r[0])
                    + r.windows(2).map(|p| inst.distance(p[0], p[1])).sum::<u64>()
                    + inst.distance(r[r.len() - 1], 0)
            })
            .sum()
    }
}

/// Decodes a `(tour, splits)` assignment into routes.
pub fn decode_assignment(
    inst: &Instance,
    tour: &[usize],
    splits: &[bool],
) -> Result<RouteSet, DecodeError> {
    RouteSet::decode(inst.n(), tour, splits)
}
