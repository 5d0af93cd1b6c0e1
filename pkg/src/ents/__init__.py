"""Decision-tree training on three-party replicated secret shares."""
