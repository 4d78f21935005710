import asyncio


async def fetch(url):
    await asyncio.sleep(0)
    return url


async def main():
    result = await fetch("x")
    return result
