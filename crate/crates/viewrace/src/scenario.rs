//! Scenario configuration files.
//!
//! Flat key–value text with sections. A `[game]` section holds the shared
//! constants, and either one `[player]` section per player or a single
//! `[players]` section with `n_players` replicating one parameter set:
//!
//! ```text
//! [game]
//! n_players = 10
//! u_min = 1
//! u_max = 10
//! horizon = infinite
//!
//! [players]
//! lambda = 100
//! gamma = 70
//! p = 100
//! z = 0
//! ```
//!
//! Finite-horizon scenarios use `horizon = finite` together with `tau`
//! (days). Lines starting with `#` are comments.

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use crate::model::{GameConfig, Horizon, PlayerParams};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing key `{key}` in section [{section}]")]
    MissingKey { key: String, section: String },
    #[error("scenario must contain either one [players] section or at least one [player] section, not both")]
    ConflictingPlayerSections,
    #[error("[players] shorthand requires n_players in [game]")]
    MissingPlayerCount,
}

#[derive(Default)]
struct Section {
    values: HashMap<String, (f64, usize)>,
    horizon: Option<(String, usize)>,
}

impl Section {
    fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).map(|(v, _)| *v)
    }

    fn require(&self, key: &str, section: &str) -> Result<f64, ScenarioError> {
        self.get(key).ok_or_else(|| ScenarioError::MissingKey {
            key: key.to_string(),
            section: section.to_string(),
        })
    }
}

fn player_from_section(sec: &Section, name: &str) -> Result<PlayerParams, ScenarioError> {
    Ok(PlayerParams {
        lambda: sec.require("lambda", name)?,
        gamma: sec.require("gamma", name)?,
        p: sec.require("p", name)?,
        z: sec.get("z").unwrap_or(0.0),
    })
}

/// Parses a scenario from text.
pub fn parse_scenario(text: &str) -> Result<GameConfig, ScenarioError> {
    let mut game = Section::default();
    let mut players_shorthand: Option<Section> = None;
    let mut per_player: Vec<Section> = Vec::new();
    let mut current: Option<&mut Section> = None;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = match name.trim() {
                "game" => Some(&mut game),
                "players" => {
                    if players_shorthand.is_some() {
                        return Err(ScenarioError::Parse {
                            line: lineno,
                            message: "duplicate [players] section".into(),
                        });
                    }
                    players_shorthand = Some(Section::default());
                    players_shorthand.as_mut()
                }
                "player" => {
                    per_player.push(Section::default());
                    per_player.last_mut()
                }
                other => {
                    return Err(ScenarioError::Parse {
                        line: lineno,
                        message: format!("unknown section [{other}]"),
                    })
                }
            };
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ScenarioError::Parse {
                line: lineno,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim();
        let Some(section) = current.as_deref_mut() else {
            return Err(ScenarioError::Parse {
                line: lineno,
                message: "key outside of any section".into(),
            });
        };
        if key == "horizon" {
            section.horizon = Some((value.to_string(), lineno));
            continue;
        }
        let parsed: f64 = value.parse().map_err(|_| ScenarioError::Parse {
            line: lineno,
            message: format!("cannot parse `{value}` as a number for `{key}`"),
        })?;
        section.values.insert(key, (parsed, lineno));
    }

    let horizon = match &game.horizon {
        None => Horizon::Infinite,
        Some((word, lineno)) => match word.as_str() {
            "infinite" => Horizon::Infinite,
            "finite" => Horizon::Finite {
                tau: game.require("tau", "game")?,
            },
            other => {
                return Err(ScenarioError::Parse {
                    line: *lineno,
                    message: format!("horizon must be `infinite` or `finite`, got `{other}`"),
                })
            }
        },
    };

    let players = match (players_shorthand, per_player.is_empty()) {
        (Some(_), false) => return Err(ScenarioError::ConflictingPlayerSections),
        (Some(shared), true) => {
            let n = game
                .get("n_players")
                .ok_or(ScenarioError::MissingPlayerCount)? as usize;
            vec![player_from_section(&shared, "players")?; n]
        }
        (None, false) => per_player
            .iter()
            .map(|s| player_from_section(s, "player"))
            .collect::<Result<Vec<_>, _>>()?,
        (None, true) => {
            return Err(ScenarioError::MissingKey {
                key: "lambda".into(),
                section: "players".into(),
            })
        }
    };

    Ok(GameConfig {
        players,
        u_min: game.require("u_min", "game")?,
        u_max: game.require("u_max", "game")?,
        horizon,
    })
}

/// Loads a scenario file from disk.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<GameConfig, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

/// Renders a configuration back into scenario-file text.
pub fn write_scenario(config: &GameConfig) -> String {
    let mut out = String::new();
    out.push_str("[game]\n");
    out.push_str(&format!("n_players = {}\n", config.n_players()));
    out.push_str(&format!("u_min = {}\n", config.u_min));
    out.push_str(&format!("u_max = {}\n", config.u_max));
    match config.horizon {
        Horizon::Infinite => out.push_str("horizon = infinite\n"),
        Horizon::Finite { tau } => {
            out.push_str("horizon = finite\n");
            out.push_str(&format!("tau = {tau}\n"));
        }
    }
    if config.is_symmetric() && !config.players.is_empty() {
        let p = &config.players[0];
        out.push_str(&format!(
            "\n[players]\nlambda = {}\ngamma = {}\np = {}\nz = {}\n",
            p.lambda, p.gamma, p.p, p.z
        ));
    } else {
        for p in &config.players {
            out.push_str(&format!(
                "\n[player]\nlambda = {}\ngamma = {}\np = {}\nz = {}\n",
                p.lambda, p.gamma, p.p, p.z
            ));
        }
    }
    out
}
