//! The three assessment dimensions, their nine benchmarks and the
//! scenario implications attached to fired conflict markers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dimension {
    Contribution,
    Interaction,
    Role,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [Dimension::Contribution, Dimension::Interaction, Dimension::Role];

    pub fn as_str(&self) -> &'static str {
        match self {
            Dimension::Contribution => "contribution",
            Dimension::Interaction => "interaction",
            Dimension::Role => "role",
        }
    }

    pub fn title(&self) -> &'static str {
        match self {
            Dimension::Contribution => "Contribution",
            Dimension::Interaction => "Interaction",
            Dimension::Role => "Role",
        }
    }

    pub fn benchmarks(&self) -> [Benchmark; 3] {
        match self {
            Dimension::Contribution => [Benchmark::Quantity, Benchmark::Quality, Benchmark::Relevance],
            Dimension::Interaction => [Benchmark::Tone, Benchmark::Effectiveness, Benchmark::Presence],
            Dimension::Role => [Benchmark::Adherence, Benchmark::Organisation, Benchmark::Support],
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown dimension {s:?}"))
    }
}

/// One of the nine base measures. Declaration order is the canonical
/// report order (grouped by dimension).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Benchmark {
    Quantity,
    Quality,
    Relevance,
    Tone,
    Effectiveness,
    Presence,
    Adherence,
    Organisation,
    Support,
}

impl Benchmark {
    pub const ALL: [Benchmark; 9] = [
        Benchmark::Quantity,
        Benchmark::Quality,
        Benchmark::Relevance,
        Benchmark::Tone,
        Benchmark::Effectiveness,
        Benchmark::Presence,
        Benchmark::Adherence,
        Benchmark::Organisation,
        Benchmark::Support,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Benchmark::Quantity => "quantity",
            Benchmark::Quality => "quality",
            Benchmark::Relevance => "relevance",
            Benchmark::Tone => "tone",
            Benchmark::Effectiveness => "effectiveness",
            Benchmark::Presence => "presence",
            Benchmark::Adherence => "adherence",
            Benchmark::Organisation => "organisation",
            Benchmark::Support => "support",
        }
    }

    pub fn title(&self) -> &'static str {
        match self {
            Benchmark::Quantity => "Quantity",
            Benchmark::Quality => "Quality",
            Benchmark::Relevance => "Relevance",
            Benchmark::Tone => "Tone",
            Benchmark::Effectiveness => "Effectiveness",
            Benchmark::Presence => "Presence",
            Benchmark::Adherence => "Adherence",
            Benchmark::Organisation => "Organisation",
            Benchmark::Support => "Support",
        }
    }

    pub fn dimension(&self) -> Dimension {
        match self {
            Benchmark::Quantity | Benchmark::Quality | Benchmark::Relevance => Dimension::Contribution,
            Benchmark::Tone | Benchmark::Effectiveness | Benchmark::Presence => Dimension::Interaction,
            Benchmark::Adherence | Benchmark::Organisation | Benchmark::Support => Dimension::Role,
        }
    }

    pub fn implication(&self, scenario: Scenario) -> &'static str {
        use Benchmark::*;
        use Scenario::*;
        match (self, scenario) {
            (Quantity, A) => "Overcentralisation in contribution. I.e., few members doing most of the work.",
            (Quantity, B) => "Social loafing. I.e., few members not carrying their weight.",
            (Quality, A) => "A team member with stronger skills and knowledge putting in disproportionately larger effort.",
            (Quality, B) => "Few students not matching the team competence standard.",
            (Relevance, A) => "A stronger understanding of the task that is not shared across the team.",
            (Relevance, B) => "Contributed in a way that wasn\u{2019}t as useful for the team.",
            (Tone, A) => "Professionalism and equal treatment in a team with cliques or negative communication.",
            (Tone, B) => "Team member who behaved more negatively compared to the remainder of the team.",
            (Effectiveness, A) => "Good communicator that kept the team on track.",
            (Effectiveness, B) => "Team members who communicated poorly compared to the rest of the team.",
            (Presence, A) => "High engagement in a more absent team.",
            (Presence, B) => "Uncooperative or absent team member.",
            (Adherence, A) => "Higher responsibility in a team with less stringent protocols for action.",
            (Adherence, B) => "Failure to follow agreed-upon and established distribution of work.",
            (Organisation, A) => "Taking the lead in structuring and coordination.",
            (Organisation, B) => "Lack of initiative and structure, failure to engage with organisational needs.",
            (Support, A) => "Extra effort to fulfil their role and help the team.",
            (Support, B) => "Low level of soft contribution and engagement.",
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Benchmark {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        // accept the US spelling as well
        let s = if s.eq_ignore_ascii_case("organization") { "organisation" } else { s };
        Self::ALL
            .into_iter()
            .find(|b| b.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown benchmark {s:?}"))
    }
}

/// Which side of the team mean an isolated student sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// Unequal benchmark, student at or above `mean + d·sd`.
    A,
    /// Unequal benchmark, student at or below `mean - d·sd`.
    B,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::A => "A",
            Scenario::B => "B",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_benchmark_belongs_to_its_dimension() {
        for d in Dimension::ALL {
            for b in d.benchmarks() {
                assert_eq!(b.dimension(), d);
            }
        }
    }

    #[test]
    fn parse_round_trip() {
        for b in Benchmark::ALL {
            assert_eq!(b.as_str().parse::<Benchmark>().unwrap(), b);
            assert_eq!(b.title().parse::<Benchmark>().unwrap(), b);
        }
        assert_eq!("Organization".parse::<Benchmark>().unwrap(), Benchmark::Organisation);
        assert!("vibes".parse::<Benchmark>().is_err());
    }
}
