"""
Serializing a sample and parsing it back
----------------------------------------

Offer five tools, render the chat with control tokens, then feed the
completion to the strict parser and compare with the gold call.
"""

import random

from callforge import fixtures
from callforge.call_parser import STRICT, parse_output
from callforge.chat_serializer import SerializerConfig, check_context_fit, serialize
from callforge.tool_sampler import SamplerConfig, sample_tools

inventory = fixtures.pruned_inventory()
config = SerializerConfig()
sample = fixtures.random_valid_sample(random.Random(4), inventory, 0, positive_fraction=1.0)

offered = sample_tools(inventory, sample.target.tool_name, True, sample.id, SamplerConfig(k=5, seed=0))
example = serialize(sample, offered, config)
print(example.text)
print("mask boundary:", example.prompt_end, "of", len(example.text))

parsed = parse_output(example.completion, config.control_tokens, STRICT)
print(parsed.kind, parsed.call == sample.target)

full = serialize(sample, inventory, config)
for name, ex in [("5 tools", example), ("27 tools", full)]:
    fit = check_context_fit(ex, 2048)
    print(f"{name}: {ex.token_count} tokens, fits={fit.fits}")
