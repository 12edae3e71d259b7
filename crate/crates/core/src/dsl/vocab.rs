use std::collections::HashMap;
use std::fmt;

/// An event label drawn from a [`Vocabulary`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(pub(crate) u16);

impl Token {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// The finite set of event tokens an environment can emit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    names: Vec<String>,
    index: HashMap<String, Token>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VocabularyError {
    #[error("duplicate token name `{0}`")]
    Duplicate(String),
    #[error("`{0}` is not a valid token name")]
    InvalidName(String),
    #[error("vocabulary is empty")]
    Empty,
    #[error("too many tokens ({0})")]
    TooLarge(usize),
}

pub(crate) const KEYWORDS: &[&str] = &[
    "fn",
    "match",
    "token",
    "if",
    "then",
    "else",
    "count",
    "count_inclusive",
    "step",
    "len",
    "_",
];

fn is_ident(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Vocabulary {
    pub fn new<I, S>(names: I) -> Result<Self, VocabularyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(VocabularyError::Empty);
        }
        if names.len() > u16::MAX as usize {
            return Err(VocabularyError::TooLarge(names.len()));
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if !is_ident(name) || KEYWORDS.contains(&name.as_str()) {
                return Err(VocabularyError::InvalidName(name.clone()));
            }
            if index.insert(name.clone(), Token(i as u16)).is_some() {
                return Err(VocabularyError::Duplicate(name.clone()));
            }
        }
        Ok(Self { names, index })
    }

    /// Tokens emitted by the DoorKey gridworld.
    pub fn doorkey() -> Self {
        Self::new([
            "other",
            "reach_goal",
            "pickup_key",
            "drop_key",
            "unlock_door",
            "open_door",
            "close_door",
        ])
        .expect("static vocabulary")
    }

    pub fn lookup(&self, name: &str) -> Option<Token> {
        self.index.get(name).copied()
    }

    pub fn name(&self, token: Token) -> &str {
        &self.names[token.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn tokens(&self) -> impl Iterator<Item = Token> + '_ {
        (0..self.names.len()).map(|i| Token(i as u16))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

impl fmt::Display for Vocabulary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.names.join(", "))
    }
}
