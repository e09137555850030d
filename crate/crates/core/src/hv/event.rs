use serde::{Deserialize, Serialize};

/// Result of one detection attempt. `NoClick` is the absence of a click in
/// the trial or window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Minus,
    NoClick,
    Plus,
}

impl Outcome {
    pub const fn value(self) -> i8 {
        match self {
            Outcome::Minus => -1,
            Outcome::NoClick => 0,
            Outcome::Plus => 1,
        }
    }

    pub fn from_value(v: i8) -> Option<Self> {
        match v {
            -1 => Some(Outcome::Minus),
            0 => Some(Outcome::NoClick),
            1 => Some(Outcome::Plus),
            _ => None,
        }
    }

    /// `Plus` for a non-negative argument, `Minus` otherwise.
    pub fn from_sign(x: f64) -> Self {
        if x >= 0.0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    pub fn is_click(self) -> bool {
        self != Outcome::NoClick
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Alice,
    Bob,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Alice => "A",
            Side::Bob => "B",
        }
    }
}

/// One detection attempt on one side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Emission (trial) index that produced the event.
    pub trial: u64,
    pub time_tag: f64,
    pub setting: u8,
    pub outcome: Outcome,
}

/// Settings used on both sides for one run, with the labels written to event
/// logs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettingPair<S> {
    pub a: S,
    pub b: S,
    pub label_a: u8,
    pub label_b: u8,
}

impl<S> SettingPair<S> {
    pub fn new(a: S, b: S) -> Self {
        Self {
            a,
            b,
            label_a: 1,
            label_b: 1,
        }
    }

    pub fn labeled(mut self, label_a: u8, label_b: u8) -> Self {
        self.label_a = label_a;
        self.label_b = label_b;
        self
    }
}
