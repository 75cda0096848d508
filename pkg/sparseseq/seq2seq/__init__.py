"""
Defines the sequence-to-sequence reserved tokens and synthetic tasks.
"""

PAD, BOS, EOS = '<pad>', '<s>', '</s>'
RESERVED_TOKENS = (PAD, BOS, EOS)
PAD_INDEX, BOS_INDEX, EOS_INDEX = range(len(RESERVED_TOKENS))

TASKS = {
    'copy': lambda source, table, random_state: list(source),
    'reverse': lambda source, table, random_state: list(reversed(source)),
    'rewrite-rules': lambda source, table, random_state: [table[token][random_state.randint(len(table[token]))] for token in source]
}
