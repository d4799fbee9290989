import asyncio
import itertools

from sessia import End, ReceiveValue, SendValue

# Three distinct protocols used as the slot alphabet for enumerated
# context/lens instance tests.
PROTOS3 = (End, SendValue(int, End), ReceiveValue(str, End))


def enumerate_contexts(alphabet, max_len):
    """All slot lists of length 0..max_len over the alphabet."""
    for n in range(max_len + 1):
        for combo in itertools.product(alphabet, repeat=n):
            yield list(combo)


def run(coro, timeout=10.0):
    """Run a coroutine on a fresh loop with a deadlock-guard timeout."""

    async def guarded():
        return await asyncio.wait_for(coro, timeout)

    return asyncio.run(guarded())
