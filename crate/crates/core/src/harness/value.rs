/// Adversary value accounting.
///
/// `received` follows the event rules directly. `current_or_spent` is the value
/// the adversary has paid out to honest parties plus the coins currently held by
/// corrupted parties, so a party leaving corruption takes its coins out of both sides.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ValueLedger {
    pub received: i64,
    pub spent: i64,
    pub live: i64,
    pub current_or_spent: i64,
    pub max_net: i64,
}

impl ValueLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Corruption of a party holding `coins` coins and banknotes worth `notes`.
    pub fn on_corrupt(&mut self, coins: u64, notes: u64) {
        self.received += (coins + notes) as i64;
    }

    pub fn on_uncorrupt(&mut self, coins: u64) {
        self.received -= coins as i64;
    }

    /// Honest party pays coins or sends a banknote to a corrupted one.
    pub fn on_received(&mut self, d: u64) {
        self.received += d as i64;
    }

    /// Corrupted party pays coins or successfully spends a banknote to an honest one.
    pub fn on_spent(&mut self, d: u64) {
        self.spent += d as i64;
    }

    /// Records the coins currently held by corrupted parties and updates the running maximum.
    pub fn observe(&mut self, live: u64) {
        self.live = live as i64;
        self.current_or_spent = self.spent + self.live;
        self.max_net = self.max_net.max(self.net());
    }

    pub fn net(&self) -> i64 {
        self.current_or_spent - self.received
    }
}
